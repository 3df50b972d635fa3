//! Univariate relevance scores and permutation p-values.
//!
//! The score between a feature and a target is the absolute Pearson
//! correlation, which for standardized features equals the absolute
//! univariate regression coefficient up to a shared constant. Multiclass
//! targets are scored through one-vs-rest indicators and combined by taking
//! the maximum over classes.
//!
//! Permutation p-values share one set of label permutations across all
//! features: permutation `r` is the Fisher–Yates shuffle drawn from ChaCha8
//! substream `(seed, r)`, so parallel or reordered evaluation cannot change
//! the result.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::data::{one_vs_rest, Target, SD_FLOOR};
use crate::error::{Error, Result};
use crate::rng;

/// Absolute Pearson correlation between two vectors, clamped to [0, 1].
/// Returns 0 when either vector has sample sd at or below [`SD_FLOOR`].
pub fn score(x: &ArrayView1<f64>, y: &ArrayView1<f64>) -> Result<f64> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "score: vector lengths {n} and {}",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("score needs at least 2 observations".into()));
    }
    let nf = n as f64;
    let mx = x.sum() / nf;
    let my = y.sum() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        let da = a - mx;
        let db = b - my;
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    let denom = (n - 1) as f64;
    if (sxx / denom).sqrt() <= SD_FLOOR || (syy / denom).sqrt() <= SD_FLOOR {
        return Ok(0.0);
    }
    let r = sxy / (sxx * syy).sqrt();
    // non-finite inputs must not fake a signal
    Ok(if r.is_finite() { r.abs().min(1.0) } else { 0.0 })
}

/// Columnwise [`score`] of every feature against `y`.
pub fn scores(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<Array1<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "scores: {} rows vs target length {}",
            x.nrows(),
            y.len()
        )));
    }
    let mut out = Array1::zeros(x.ncols());
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        out[j] = score(&col, y)?;
    }
    Ok(out)
}

/// Per-class one-vs-rest scores and their max-over-classes combination.
/// A degenerate class indicator (all zeros or all ones) contributes 0.
pub fn multiclass_scores(
    x: &ArrayView2<f64>,
    target: &Target,
) -> Result<(Vec<Array1<f64>>, Array1<f64>)> {
    let n_classes = match target {
        Target::Multiclass { n_classes, .. } => *n_classes,
        _ => return Err(Error::InvalidInput("multiclass_scores expects a multiclass target".into())),
    };
    let mut per_class = Vec::with_capacity(n_classes);
    let mut combined = Array1::zeros(x.ncols());
    for c in 1..=n_classes {
        let ind = one_vs_rest(target, c)?;
        let s = scores(x, &ind.view())?;
        for j in 0..x.ncols() {
            if s[j] > combined[j] {
                combined[j] = s[j];
            }
        }
        per_class.push(s);
    }
    Ok((per_class, combined))
}

/// Scores of every feature against a target of any kind; multiclass targets
/// yield the max-combined score.
pub fn target_scores(x: &ArrayView2<f64>, target: &Target) -> Result<Array1<f64>> {
    match target.numeric() {
        Some(y) => scores(x, &y.view()),
        None => Ok(multiclass_scores(x, target)?.1),
    }
}

/// Per-feature permutation p-values against the target.
///
/// `p_j = (1/R) * #{r : s_j(X, y_r) >= s_j(X, y)}` with the same `R`
/// permutations shared across all features. Multiclass targets permute the
/// raw label vector and re-encode the indicators per permutation, and both
/// the observed and permuted statistics are the max-combined scores.
pub fn feature_pvalues(
    x: &ArrayView2<f64>,
    target: &Target,
    n_permutations: usize,
    seed: u64,
) -> Result<Array1<f64>> {
    if n_permutations == 0 {
        return Err(Error::InvalidInput("need at least 1 permutation".into()));
    }
    let observed = target_scores(x, target)?;
    let mut counts = vec![0u64; x.ncols()];
    for_each_permuted_scores(x, target, n_permutations, seed, |_, row| {
        for (c, (&perm, &obs)) in counts.iter_mut().zip(row.iter().zip(observed.iter())) {
            if perm >= obs {
                *c += 1;
            }
        }
    })?;
    let r = n_permutations as f64;
    Ok(counts.iter().map(|&c| c as f64 / r).collect())
}

/// Column statistics reused across permutations: per-column mean and
/// centered sum of squares, plus a validity mask for the sd floor.
struct ColumnStats {
    centered: Array2<f64>,
    inv_norm: Vec<f64>, // 1/sqrt(ss_j), or 0 for floored columns
}

fn center_columns(x: &ArrayView2<f64>) -> ColumnStats {
    let n = x.nrows() as f64;
    let denom = x.nrows().saturating_sub(1).max(1) as f64;
    let mut centered = x.to_owned();
    let mut inv_norm = Vec::with_capacity(x.ncols());
    for mut col in centered.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
        let ss: f64 = col.iter().map(|&v| v * v).sum();
        if (ss / denom).sqrt() <= SD_FLOOR {
            inv_norm.push(0.0);
        } else {
            inv_norm.push(1.0 / ss.sqrt());
        }
    }
    ColumnStats { centered, inv_norm }
}

const PERM_BLOCK: usize = 128;

/// Streams the per-feature score vector of every permuted target through
/// `sink(r, scores_r)`. Binary and regression targets permute the numeric
/// vector; multiclass targets permute the raw labels and fold the per-class
/// scores by max. Permutation `r` is drawn from substream `(seed, r)`.
///
/// The heavy lifting is one matrix product per block of permutations:
/// because permuting preserves the target's mean and spread, the correlation
/// numerators are plain dot products of the pre-centered columns with the
/// permuted (raw) target.
pub(crate) fn for_each_permuted_scores<F>(
    x: &ArrayView2<f64>,
    target: &Target,
    n_permutations: usize,
    seed: u64,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(usize, &ArrayView1<f64>),
{
    target
        .validate()
        .map_err(|_| Error::InvalidInput("permutation test needs a non-degenerate target".into()))?;
    let n = x.nrows();
    if n != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs target length {}",
            n,
            target.len()
        )));
    }
    let d = x.ncols();
    let stats = center_columns(x);
    let denom = (n - 1) as f64;

    // Per-target-column constants: centered sum of squares of the (permuted)
    // target columns, which permutation leaves unchanged.
    enum Cols {
        Numeric { y: Array1<f64>, inv_norm: f64 },
        Indicators { labels: Vec<usize>, inv_norms: Vec<f64>, n_classes: usize },
    }
    let cols = match target {
        Target::Regression(_) | Target::Binary(_) => {
            let y = target.numeric().expect("numeric target");
            let mean = y.sum() / n as f64;
            let ss: f64 = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let inv = if (ss / denom).sqrt() <= SD_FLOOR { 0.0 } else { 1.0 / ss.sqrt() };
            Cols::Numeric { y, inv_norm: inv }
        }
        Target::Multiclass { labels, n_classes } => {
            let mut inv_norms = Vec::with_capacity(*n_classes);
            for c in 1..=*n_classes {
                let nc = labels.iter().filter(|&&l| l == c).count() as f64;
                let ss = nc * (n as f64 - nc) / n as f64;
                let inv = if (ss / denom).sqrt() <= SD_FLOOR { 0.0 } else { 1.0 / ss.sqrt() };
                inv_norms.push(inv);
            }
            Cols::Indicators { labels: labels.clone(), inv_norms, n_classes: *n_classes }
        }
    };
    let cols_per_perm = match &cols {
        Cols::Numeric { .. } => 1,
        Cols::Indicators { n_classes, .. } => *n_classes,
    };

    let mut folded = Array1::zeros(d);
    let mut start = 0;
    while start < n_permutations {
        let block = PERM_BLOCK.min(n_permutations - start);
        let mut yb = Array2::zeros((n, block * cols_per_perm));
        for b in 0..block {
            let perm = rng::permutation(&mut rng::substream(seed, (start + b) as u64), n);
            match &cols {
                Cols::Numeric { y, .. } => {
                    for (i, &p) in perm.iter().enumerate() {
                        yb[[i, b]] = y[p];
                    }
                }
                Cols::Indicators { labels, n_classes, .. } => {
                    for (i, &p) in perm.iter().enumerate() {
                        let l = labels[p];
                        yb[[i, b * n_classes + (l - 1)]] = 1.0;
                    }
                }
            }
        }
        // numerators[j, col] = centered_x_j . y_col
        let numerators = stats.centered.t().dot(&yb);
        for b in 0..block {
            match &cols {
                Cols::Numeric { inv_norm, .. } => {
                    for j in 0..d {
                        folded[j] =
                            (numerators[[j, b]] * stats.inv_norm[j] * inv_norm).abs().min(1.0);
                    }
                }
                Cols::Indicators { inv_norms, n_classes, .. } => {
                    for j in 0..d {
                        let mut best = 0.0f64;
                        for (c, &inv) in inv_norms.iter().enumerate() {
                            let v = (numerators[[j, b * n_classes + c]] * stats.inv_norm[j] * inv)
                                .abs()
                                .min(1.0);
                            if v > best {
                                best = v;
                            }
                        }
                        folded[j] = best;
                    }
                }
            }
            sink(start + b, &folded.view());
        }
        start += block;
    }
    Ok(())
}
