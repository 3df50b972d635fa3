//! Evaluation harness: synthetic generators, classification metrics, and the
//! repeated stratified-split protocol that compares reduction methods through
//! a downstream L2-regularized classifier.
//!
//! Every split fits the dimension reduction on the training fold only, picks
//! the classifier penalty by inner cross-validation on the training latent
//! features, and scores the held-out fold. Splits and inner folds draw from
//! dedicated ChaCha8 substreams, so a report is a pure function of its
//! inputs.

use ndarray::{Array2, ArrayView2, Axis};
use rand_distr::Distribution;

use crate::data::{Dataset, Target};
use crate::error::{Error, Result};
use crate::logistic::fit_logistic;
use crate::model::{FitConfig, Method};
use crate::rng;

/// Sample size of both toy datasets.
pub const TOY_N: usize = 200;
/// Toy 1: sd of the irrelevant high-variance feature x1.
pub const TOY1_NOISE_SD: f64 = 3.0;
/// Toy 1: class means of x2 are plus/minus this, within-class sd 1.
pub const TOY1_CLASS_SEP: f64 = 2.0;
/// Toy 2: class means of x2 are plus/minus this, within-class sd 1.
pub const TOY2_CLASS_SEP: f64 = 1.0;
/// Toy 2: coupling of x1 to the within-class part of x2.
pub const TOY2_COUPLING: f64 = 1.0;
/// Toy 2: sd of the independent noise in x1.
pub const TOY2_NOISE_SD: f64 = 0.53;

/// Two Gaussian classes separated only along x2; x1 is independent
/// high-variance noise. 100 rows per class.
pub fn gen_toy1(seed: u64) -> Dataset {
    let mut r = rng::substream(seed, 0);
    let normal = rand_distr::StandardNormal;
    let half = TOY_N / 2;
    let mut x = Array2::zeros((TOY_N, 2));
    let mut labels = Vec::with_capacity(TOY_N);
    for i in 0..TOY_N {
        let class = (i >= half) as u8;
        let sign = if class == 1 { 1.0 } else { -1.0 };
        let e1: f64 = normal.sample(&mut r);
        let e2: f64 = normal.sample(&mut r);
        x[[i, 0]] = TOY1_NOISE_SD * e1;
        x[[i, 1]] = sign * TOY1_CLASS_SEP + e2;
        labels.push(class);
    }
    Dataset::new(x, Target::Binary(labels)).expect("generated data is valid")
}

/// Correlated pair where x1 alone carries no class signal (it couples only
/// to the within-class part of x2) but sharpens the separation jointly:
/// x2 = class_sep * sign + w, x1 = coupling * w + noise. 100 rows per class.
pub fn gen_toy2(seed: u64) -> Dataset {
    let mut r = rng::substream(seed, 0);
    let normal = rand_distr::StandardNormal;
    let half = TOY_N / 2;
    let mut x = Array2::zeros((TOY_N, 2));
    let mut labels = Vec::with_capacity(TOY_N);
    for i in 0..TOY_N {
        let class = (i >= half) as u8;
        let sign = if class == 1 { 1.0 } else { -1.0 };
        let w: f64 = normal.sample(&mut r);
        let e: f64 = normal.sample(&mut r);
        x[[i, 0]] = TOY2_COUPLING * w + TOY2_NOISE_SD * e;
        x[[i, 1]] = sign * TOY2_CLASS_SEP + w;
        labels.push(class);
    }
    Dataset::new(x, Target::Binary(labels)).expect("generated data is valid")
}

/// I.i.d. standard normal features with balanced labels independent of X.
pub fn gen_noise(n: usize, d: usize, seed: u64) -> Dataset {
    let mut r = rng::substream(seed, 0);
    let normal = rand_distr::StandardNormal;
    let x = Array2::from_shape_fn((n, d), |_| normal.sample(&mut r));
    let mut labels: Vec<u8> = (0..n).map(|i| (i < n.div_ceil(2)) as u8).collect();
    rng::shuffle(&mut r, &mut labels);
    Dataset::new(x, Target::Binary(labels)).expect("generated data is valid")
}

/// Gaussian blobs: `n_classes` equally sized classes whose means shift one
/// block of the leading `signal_dims` features each, sized so every pair of
/// class means is `separation * sqrt(signal_dims)` apart. All features have
/// unit within-class variance.
pub fn gen_blobs(
    n: usize,
    d: usize,
    n_classes: usize,
    signal_dims: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_classes < 2 || n < 2 * n_classes {
        return Err(Error::InvalidInput("blobs need at least 2 classes and 2 rows per class".into()));
    }
    if signal_dims < n_classes || signal_dims > d {
        return Err(Error::InvalidInput(format!(
            "signal_dims must lie in [n_classes, d], got {signal_dims} with C = {n_classes}, d = {d}"
        )));
    }
    // Contiguous blocks of the signal dims, one per class, sizes as equal as
    // possible. Each class mean lifts its own block by mu_c with
    // mu_c^2 * |block_c| constant, which makes all pairwise mean distances
    // equal to separation * sqrt(signal_dims).
    let base = signal_dims / n_classes;
    let extra = signal_dims % n_classes;
    let mut block_bounds = Vec::with_capacity(n_classes + 1);
    block_bounds.push(0);
    for c in 0..n_classes {
        let size = base + usize::from(c < extra);
        block_bounds.push(block_bounds[c] + size);
    }
    let pair_dist_sq = separation * separation * signal_dims as f64;
    let mut r = rng::substream(seed, 0);
    let normal = rand_distr::StandardNormal;
    let mut x = Array2::from_shape_fn((n, d), |_| normal.sample(&mut r));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % n_classes; // 0-based
        labels.push(class + 1);
        let block = block_bounds[class]..block_bounds[class + 1];
        let mu = (pair_dist_sq / (2.0 * block.len() as f64)).sqrt();
        for j in block {
            x[[i, j]] += mu;
        }
    }
    Dataset::new(x, Target::Multiclass { labels, n_classes })
}

/// Mean log predictive density and how many probabilities had to be clamped
/// at 1e-15 because the model assigned (numerically) zero mass to a realized
/// label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mlpd {
    pub value: f64,
    pub n_clamped: usize,
}

fn check_probs(probs: &ArrayView2<f64>, target: &Target) -> Result<usize> {
    let n_classes = target
        .n_classes()
        .ok_or_else(|| Error::InvalidInput("metrics need a classification target".into()))?;
    if probs.nrows() != target.len() || probs.ncols() != n_classes {
        return Err(Error::DimensionMismatch(format!(
            "probability matrix {}x{} vs {} rows and {} classes",
            probs.nrows(),
            probs.ncols(),
            target.len(),
            n_classes
        )));
    }
    for (i, row) in probs.axis_iter(Axis(0)).enumerate() {
        let s: f64 = row.sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("row {i} of probs sums to {s}")));
        }
    }
    Ok(n_classes)
}

/// Mean log probability of the true labels.
pub fn mlpd(probs: &ArrayView2<f64>, target: &Target) -> Result<Mlpd> {
    check_probs(probs, target)?;
    let n = target.len();
    let mut total = 0.0;
    let mut n_clamped = 0;
    for i in 0..n {
        let c = target.class_index(i).expect("classification target");
        let mut p = probs[[i, c]];
        if p < 1e-15 {
            p = 1e-15;
            n_clamped += 1;
        }
        total += p.ln();
    }
    Ok(Mlpd { value: total / n as f64, n_clamped })
}

/// Fraction of rows whose most probable class is the true one; argmax ties
/// resolve to the lowest class index.
pub fn accuracy(probs: &ArrayView2<f64>, target: &Target) -> Result<f64> {
    let n_classes = check_probs(probs, target)?;
    let n = target.len();
    let mut hits = 0usize;
    for i in 0..n {
        let mut arg = 0;
        let mut best = probs[[i, 0]];
        for c in 1..n_classes {
            if probs[[i, c]] > best {
                best = probs[[i, c]];
                arg = c;
            }
        }
        if arg == target.class_index(i).expect("classification target") {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Repeated stratified train/test splitting plan.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub n_repeats: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(seed: u64) -> Self {
        SplitPlan { n_repeats: 50, test_fraction: 0.2, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_repeats == 0 {
            return Err(Error::InvalidInput("n_repeats must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Stratified random splits: every class is shuffled separately and
/// contributes `round(test_fraction * n_c)` rows to the test fold, capped so
/// at least one row of every class stays in training. Split `r` draws from
/// the substream derived for it, so splits are independent of evaluation
/// order. Returns `(train, test)` index pairs, each sorted ascending.
pub fn stratified_splits(
    target: &Target,
    plan: &SplitPlan,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    plan.validate()?;
    let n_classes = target
        .n_classes()
        .ok_or_else(|| Error::InvalidInput("stratified splits need a classification target".into()))?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for i in 0..target.len() {
        by_class[target.class_index(i).expect("classification target")].push(i);
    }
    let mut splits = Vec::with_capacity(plan.n_repeats);
    for r in 0..plan.n_repeats {
        let mut rng =
            rng::substream(rng::derive_seed(plan.seed, rng::DOMAIN_SPLIT, r as u64), 0);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class_rows in &by_class {
            let mut rows = class_rows.clone();
            rng::shuffle(&mut rng, &mut rows);
            let want = (plan.test_fraction * rows.len() as f64).round() as usize;
            let n_test = want.min(rows.len().saturating_sub(1));
            test.extend_from_slice(&rows[..n_test]);
            train.extend_from_slice(&rows[n_test..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        splits.push((train, test));
    }
    Ok(splits)
}

/// Penalty grid searched by inner cross-validation.
pub const L2_GRID: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2];

/// Stratified k-fold partition used by the inner penalty search: per class,
/// shuffle then deal round-robin across folds.
fn kfold_stratified(target: &Target, k: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n_classes = target.n_classes().expect("classification target");
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for i in 0..target.len() {
        by_class[target.class_index(i).expect("classification target")].push(i);
    }
    let mut rng = rng::substream(seed, 0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); k];
    for class_rows in &mut by_class {
        rng::shuffle(&mut rng, class_rows);
        for (pos, &row) in class_rows.iter().enumerate() {
            buckets[pos % k].push(row);
        }
    }
    (0..k)
        .map(|fold| {
            let mut val = buckets[fold].clone();
            let mut train: Vec<usize> = buckets
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != fold)
                .flat_map(|(_, b)| b.iter().copied())
                .collect();
            train.sort_unstable();
            val.sort_unstable();
            (train, val)
        })
        .filter(|(train, val)| !train.is_empty() && !val.is_empty())
        .collect()
}

/// Picks the classifier penalty by 5-fold inner cross-validation on the
/// training latent features, maximizing mean validation MLPD; ties go to the
/// stronger penalty.
fn choose_l2(z: &ArrayView2<f64>, target: &Target, seed: u64) -> f64 {
    let folds = kfold_stratified(target, 5, seed);
    let mut best = (f64::NEG_INFINITY, 1.0);
    for &l2 in &L2_GRID {
        let mut total = 0.0;
        let mut count = 0usize;
        for (train, val) in &folds {
            let z_train = z.select(Axis(0), train);
            let z_val = z.select(Axis(0), val);
            let t_train = target.select(train);
            let t_val = target.select(val);
            let Ok(clf) = fit_logistic(&z_train.view(), &t_train, l2) else { continue };
            let Ok(probs) = clf.predict_proba(&z_val.view()) else { continue };
            let Ok(m) = mlpd(&probs.view(), &t_val) else { continue };
            total += m.value;
            count += 1;
        }
        if count == folds.len() && count > 0 {
            let mean = total / count as f64;
            if mean >= best.0 {
                best = (mean, l2);
            }
        }
    }
    best.1
}

/// One (method, split) evaluation outcome.
#[derive(Debug, Clone)]
pub struct EvalCell {
    pub method: Method,
    pub split: usize,
    pub mlpd: f64,
    pub accuracy: f64,
}

/// A (method, split) pair whose evaluation failed; recorded, not fatal.
#[derive(Debug, Clone)]
pub struct EvalFailure {
    pub method: Method,
    pub split: usize,
    pub message: String,
}

/// Per-method aggregate with normal-approximation 95% intervals over splits.
#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: Method,
    pub n_ok: usize,
    pub mean_mlpd: f64,
    pub mlpd_interval: (f64, f64),
    pub mean_accuracy: f64,
    pub accuracy_interval: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub cells: Vec<EvalCell>,
    pub failures: Vec<EvalFailure>,
    pub summaries: Vec<MethodSummary>,
}

impl EvalReport {
    /// The per-split table as CSV: `method,split,mlpd,accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,split,mlpd,accuracy\n");
        for cell in &self.cells {
            out.push_str(&format!(
                "{},{},{},{}\n",
                cell.method, cell.split, cell.mlpd, cell.accuracy
            ));
        }
        out
    }
}

fn mean_and_interval(values: &[f64]) -> (f64, (f64, f64)) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, (f64::NAN, f64::NAN));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, (mean, mean));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let half = 1.96 * (var / n as f64).sqrt();
    (mean, (mean - half, mean + half))
}

/// Runs the repeated-split comparison. For each split the dimension
/// reduction is fitted on the training fold only, both folds are projected,
/// the classifier penalty is chosen by inner cross-validation, and the test
/// fold is scored. All methods in one split share the fit seed, giving a
/// paired comparison.
pub fn run_protocol(
    data: &Dataset,
    methods: &[Method],
    plan: &SplitPlan,
    config: &FitConfig,
) -> Result<EvalReport> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods to evaluate".into()));
    }
    data.target
        .validate()
        .map_err(|e| Error::InvalidInput(format!("degenerate target: {e}")))?;
    if data.target.n_classes().is_none() {
        return Err(Error::InvalidInput("the evaluation protocol needs a classification target".into()));
    }
    let splits = stratified_splits(&data.target, plan)?;
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (split_idx, (train_rows, test_rows)) in splits.iter().enumerate() {
        let train = data.select_rows(train_rows);
        let test = data.select_rows(test_rows);
        let fit_seed = rng::derive_seed(config.seed, rng::DOMAIN_EVAL_FIT, split_idx as u64);
        let split_config = FitConfig { seed: fit_seed, ..config.clone() };
        for &method in methods {
            match evaluate_cell(method, &train, &test, &split_config) {
                Ok((m, a)) => {
                    cells.push(EvalCell { method, split: split_idx, mlpd: m, accuracy: a })
                }
                Err(e) => failures.push(EvalFailure {
                    method,
                    split: split_idx,
                    message: e.to_string(),
                }),
            }
        }
    }
    // method-major ordering for stable reports
    cells.sort_by_key(|c| {
        (Method::ALL.iter().position(|m| *m == c.method).unwrap_or(usize::MAX), c.split)
    });
    let mut summaries = Vec::new();
    for &method in methods {
        let ms: Vec<f64> =
            cells.iter().filter(|c| c.method == method).map(|c| c.mlpd).collect();
        let accs: Vec<f64> =
            cells.iter().filter(|c| c.method == method).map(|c| c.accuracy).collect();
        let (mean_mlpd, mlpd_interval) = mean_and_interval(&ms);
        let (mean_accuracy, accuracy_interval) = mean_and_interval(&accs);
        summaries.push(MethodSummary {
            method,
            n_ok: ms.len(),
            mean_mlpd,
            mlpd_interval,
            mean_accuracy,
            accuracy_interval,
        });
    }
    Ok(EvalReport { cells, failures, summaries })
}

fn evaluate_cell(
    method: Method,
    train: &Dataset,
    test: &Dataset,
    config: &FitConfig,
) -> Result<(f64, f64)> {
    let fit = crate::fit(method, train, config)?;
    let z_train = fit.model.transform(&train.features.view())?;
    let inner_seed = rng::derive_seed(config.seed, rng::DOMAIN_INNER_CV, 0);
    let l2 = choose_l2(&z_train.view(), &train.target, inner_seed);
    let clf = fit_logistic(&z_train.view(), &train.target, l2)?;
    let z_test = fit.model.transform(&test.features.view())?;
    let probs = clf.predict_proba(&z_test.view())?;
    let m = mlpd(&probs.view(), &test.target)?;
    let a = accuracy(&probs.view(), &test.target)?;
    Ok((m.value, a))
}
