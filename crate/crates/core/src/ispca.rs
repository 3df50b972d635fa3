//! The iterative supervised principal components algorithm.
//!
//! Each supervised iteration scores every feature against the target, scans
//! a grid of screening thresholds for the screened principal component whose
//! projection correlates best with the target, then subtracts the variation
//! explained by that latent feature from every column (including screened-out
//! ones). A permutation test on the maximal univariate score gates each
//! extraction; when it fails, the remaining budget is optionally filled with
//! unsupervised components of the deflated matrix.
//!
//! Deflating by the latent feature makes every later latent feature exactly
//! orthogonal to the earlier ones, and the projection vectors that reproduce
//! the latent features directly from the standardized data fall out of a
//! cheap inner-product recurrence over the deflation coefficients
//! ([`projection_vectors`]).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::data::{standardize, Dataset, StandardizationParams, Target, SD_FLOOR};
use crate::error::{Error, Result};
use crate::model::{
    Component, ComponentKind, ComponentMeta, FitConfig, Method, ProjectionModel, Variant,
};
use crate::pca::{fix_sign, leading_pc};
use crate::rng;
use crate::scoring;

/// Least-squares coefficients of one deflation step: column `j` of the
/// deflated matrix is `x_j - b_j * z`.
#[derive(Debug, Clone)]
pub struct DeflationRecord {
    /// `b_j = (z'z)^-1 (x_j'z)` for every column.
    pub coefficients: Array1<f64>,
    pub z_norm_sq: f64,
}

/// Grid of screening thresholds between "keep only the top-scoring feature"
/// and "keep `window` features".
///
/// The strict endpoint realizations: the tight end is the second-largest
/// distinct score (or just below the maximum when only one feature scores
/// positive), the loose end is the `min(window, #positive)`-th largest score
/// shrunk by a relative 1e-12 so that feature survives the strict `s > gamma`
/// comparison. Returns `m` evenly spaced values, deduplicated, descending.
pub fn gamma_grid(scores: &ArrayView1<f64>, m: usize, window: usize) -> Result<Vec<f64>> {
    if m == 0 || window == 0 {
        return Err(Error::InvalidInput("gamma_grid needs m >= 1 and window >= 1".into()));
    }
    let mut positive: Vec<f64> = scores.iter().copied().filter(|&s| s > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::NoSignal("all univariate scores are zero".into()));
    }
    positive.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = positive[0];
    let second_distinct = positive.iter().copied().find(|&s| s < top);
    let gamma_max = second_distinct.unwrap_or(top * (1.0 - 1e-12));
    let keep = window.min(positive.len());
    let gamma_min = positive[keep - 1] * (1.0 - 1e-12);

    let mut grid = Vec::with_capacity(m);
    if m == 1 {
        grid.push(gamma_max);
    } else {
        for i in 0..m {
            let t = i as f64 / (m - 1) as f64;
            grid.push(gamma_max + (gamma_min - gamma_max) * t);
        }
    }
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap());
    grid.dedup();
    Ok(grid)
}

/// Subtracts from every column its least-squares projection onto `z`,
/// leaving the whole matrix orthogonal to `z`.
pub fn deflate(x: &ArrayView2<f64>, z: &ArrayView1<f64>) -> Result<(Array2<f64>, DeflationRecord)> {
    if x.nrows() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "deflate: {} rows vs z length {}",
            x.nrows(),
            z.len()
        )));
    }
    let z_norm_sq = z.dot(z);
    if z_norm_sq <= 0.0 {
        return Err(Error::InvalidInput("deflate: z is the zero vector".into()));
    }
    let b = x.t().dot(z) / z_norm_sq;
    let mut out = x.to_owned();
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        row.scaled_add(-z[i], &b);
    }
    Ok((out, DeflationRecord { coefficients: b, z_norm_sq }))
}

/// Permutation p-value of the maximal univariate score,
/// `p = (1/R) #{r : max_j S(x_j, y_r) >= max_j S(x_j, y)}`.
///
/// Multiclass targets take the max over features and classes, permuting the
/// raw label vector once per replicate so the family-wise null is exact.
/// Permutation `r` draws from ChaCha8 substream `(seed, r)`.
pub fn permutation_pvalue(
    x: &ArrayView2<f64>,
    target: &Target,
    n_permutations: usize,
    seed: u64,
) -> Result<f64> {
    if n_permutations == 0 {
        return Err(Error::InvalidInput("need at least 1 permutation".into()));
    }
    let observed = scoring::target_scores(x, target)?;
    let observed_max = observed.iter().copied().fold(0.0f64, f64::max);
    let mut count = 0u64;
    scoring::for_each_permuted_scores(x, target, n_permutations, seed, |_, row| {
        let m = row.iter().copied().fold(0.0f64, f64::max);
        if m >= observed_max {
            count += 1;
        }
    })?;
    Ok(count as f64 / n_permutations as f64)
}

/// Rebuilds original-space projection vectors from deflated-space directions
/// and the deflation records that preceded each of them.
///
/// For component `k`: start from `v_k` and for `t = k-1` down to `1` apply
/// `v' <- v' - (b_t . v') v_t`. Record `t` must describe the deflation that
/// followed component `t`, so at least `vs.len() - 1` records are required.
pub fn projection_vectors(vs: &[Array1<f64>], records: &[DeflationRecord]) -> Vec<Array1<f64>> {
    assert!(
        vs.len() <= records.len() + 1,
        "projection_vectors: {} components need at least {} deflation records",
        vs.len(),
        vs.len().saturating_sub(1)
    );
    vs.iter()
        .enumerate()
        .map(|(k, v)| {
            let mut w = v.clone();
            for t in (0..k).rev() {
                let c = records[t].coefficients.dot(&w);
                w.scaled_add(-c, &vs[t]);
            }
            w
        })
        .collect()
}

/// Winning screened direction of one supervised iteration.
#[derive(Debug, Clone)]
pub struct SupervisedCandidate {
    /// Direction in the current deflated space, zero outside its survivors.
    pub v: Array1<f64>,
    /// Projection of the current matrix onto `v`.
    pub z: Array1<f64>,
    pub gamma: f64,
    /// Achieved score S(z, y) (against the winning class for multiclass).
    pub score: f64,
    pub source_class: Option<usize>,
    pub degenerate: bool,
}

struct GridSearchHit {
    v_padded: Array1<f64>,
    z: Array1<f64>,
    gamma: f64,
    score: f64,
    degenerate: bool,
}

fn numeric_grid_search(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    grid_size: usize,
    window: usize,
) -> Result<GridSearchHit> {
    let d = x.ncols();
    let s = scoring::scores(x, y)?;
    let grid = gamma_grid(&s.view(), grid_size, window)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&j| s[j]).collect();

    let mut best: Option<(f64, f64, usize, crate::pca::PrincipalDirection, Array1<f64>)> = None;
    let mut prev_count = usize::MAX;
    for &gamma in &grid {
        let count = sorted.partition_point(|&v| v > gamma);
        if count == 0 || count == prev_count {
            continue; // same survivor set as the previous (larger) threshold
        }
        prev_count = count;
        let sub = x.select(Axis(1), &order[..count]);
        let pd = leading_pc(&sub.view())?;
        let z = sub.dot(&pd.v);
        let sc = scoring::score(&z.view(), y)?;
        // strict improvement keeps the larger gamma on ties
        if best.as_ref().is_none_or(|b| sc > b.0) {
            best = Some((sc, gamma, count, pd, z));
        }
    }
    let (score, gamma, count, pd, z) =
        best.ok_or_else(|| Error::NoSignal("no screening threshold yielded survivors".into()))?;
    let mut v_padded = Array1::zeros(d);
    for (i, &j) in order[..count].iter().enumerate() {
        v_padded[j] = pd.v[i];
    }
    Ok(GridSearchHit { v_padded, z, gamma, score, degenerate: pd.degenerate })
}

/// Step 2 of the iteration: over the threshold grid (and over one-vs-rest
/// classes for multiclass targets), the screened leading principal component
/// whose projection maximizes the univariate score against the target.
/// Ties prefer the larger threshold (sparser direction) and, across classes,
/// the lowest class index.
pub fn best_supervised_direction(
    x: &ArrayView2<f64>,
    target: &Target,
    config: &FitConfig,
) -> Result<SupervisedCandidate> {
    match target {
        Target::Regression(_) | Target::Binary(_) => {
            let y = target.numeric().expect("numeric target");
            let hit = numeric_grid_search(x, &y.view(), config.grid_size, config.window)?;
            Ok(SupervisedCandidate {
                v: hit.v_padded,
                z: hit.z,
                gamma: hit.gamma,
                score: hit.score,
                source_class: None,
                degenerate: hit.degenerate,
            })
        }
        Target::Multiclass { n_classes, .. } => {
            let mut best: Option<SupervisedCandidate> = None;
            for class in 1..=*n_classes {
                let indicator = crate::data::one_vs_rest(target, class)?;
                let hit = match numeric_grid_search(
                    x,
                    &indicator.view(),
                    config.grid_size,
                    config.window,
                ) {
                    Ok(h) => h,
                    Err(Error::NoSignal(_)) => continue,
                    Err(e) => return Err(e),
                };
                if best.as_ref().is_none_or(|b| hit.score > b.score) {
                    best = Some(SupervisedCandidate {
                        v: hit.v_padded,
                        z: hit.z,
                        gamma: hit.gamma,
                        score: hit.score,
                        source_class: Some(class),
                        degenerate: hit.degenerate,
                    });
                }
            }
            best.ok_or_else(|| Error::NoSignal("no class has a nonzero score".into()))
        }
    }
}

/// Metadata attached to an extraction before its projection vector exists.
pub(crate) struct ExtractionMeta {
    pub kind: ComponentKind,
    pub gamma: Option<f64>,
    pub pvalue: Option<f64>,
    pub score: f64,
    pub source_class: Option<usize>,
    pub degenerate: bool,
}

/// Working state of a fit: the progressively deflated matrix plus everything
/// recorded along the way. All fitting methods in this crate funnel through
/// this chain, which is what makes the latent features of every model
/// mutually orthogonal by construction.
pub(crate) struct DeflationChain {
    pub x: Array2<f64>,
    vs: Vec<Array1<f64>>,
    zs: Vec<Array1<f64>>,
    records: Vec<DeflationRecord>,
    metas: Vec<ExtractionMeta>,
}

impl DeflationChain {
    pub fn new(x_std: Array2<f64>) -> Self {
        DeflationChain { x: x_std, vs: Vec::new(), zs: Vec::new(), records: Vec::new(), metas: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.vs.len()
    }

    pub fn extract(&mut self, v: Array1<f64>, meta: ExtractionMeta) -> Result<()> {
        let z = self.x.dot(&v);
        let (next, record) = deflate(&self.x.view(), &z.view())?;
        self.x = next;
        self.vs.push(v);
        self.zs.push(z);
        self.records.push(record);
        self.metas.push(meta);
        Ok(())
    }

    pub fn finish(
        self,
        data: &Dataset,
        params: StandardizationParams,
        method: Method,
        config: &FitConfig,
        warnings: Vec<String>,
    ) -> FitResult {
        let n = data.n_rows();
        let d = data.n_features();
        let k = self.vs.len();
        let ws = projection_vectors(&self.vs, &self.records);

        let mut w = Array2::zeros((d, k));
        let mut z_train = Array2::zeros((n, k));
        let mut z_scales = Array1::zeros(k);
        for i in 0..k {
            w.column_mut(i).assign(&ws[i]);
            z_train.column_mut(i).assign(&self.zs[i]);
            let z = &self.zs[i];
            let mean = z.sum() / n as f64;
            let ss: f64 = z.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            z_scales[i] = if sd > 0.0 { sd } else { 1.0 };
        }

        let components: Vec<Component> = self
            .vs
            .into_iter()
            .zip(ws)
            .zip(self.metas)
            .map(|((v, w_col), meta)| Component {
                v,
                w: w_col,
                kind: meta.kind,
                gamma: meta.gamma,
                pvalue: meta.pvalue,
                score: meta.score,
                source_class: meta.source_class,
                degenerate: meta.degenerate,
            })
            .collect();

        let model = ProjectionModel {
            w,
            components: components.iter().map(ComponentMeta::from).collect(),
            standardization: params,
            z_scales,
            method,
            config: config.clone(),
            target_kind: data.target.kind(),
            label_map: data.label_names.clone(),
            warnings,
        };
        FitResult { model, components, deflations: self.records, z_train }
    }
}

/// A fitted model together with the fit-time artifacts that the model file
/// does not carry: full components (deflated-space and original-space
/// vectors), the deflation records, and the iteratively computed training
/// latent features before unit-variance normalization.
#[derive(Debug)]
pub struct FitResult {
    pub model: ProjectionModel,
    pub components: Vec<Component>,
    pub deflations: Vec<DeflationRecord>,
    pub z_train: Array2<f64>,
}

/// Score of a latent feature against the target (max over one-vs-rest
/// classes for multiclass targets).
fn latent_score(z: &Array1<f64>, target: &Target) -> Result<f64> {
    let col = z.view().insert_axis(Axis(1));
    Ok(scoring::target_scores(&col, target)?[0])
}

/// Fills the chain with unsupervised principal components of the current
/// deflated matrix until `k_total` components exist or rank runs out, in
/// which case a shortfall warning is recorded.
pub(crate) fn extend_unsupervised(
    chain: &mut DeflationChain,
    k_total: usize,
    target: &Target,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let n = chain.x.nrows();
    let mut tail_vs: Vec<Array1<f64>> = Vec::new();
    while chain.len() < k_total {
        let mut pd = match leading_pc(&chain.x.view()) {
            Ok(pd) => pd,
            Err(Error::NoSignal(_)) => {
                warnings.push(format!("unsupervised-shortfall:{}/{}", chain.len(), k_total));
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        for prev in &tail_vs {
            let c = pd.v.dot(prev);
            pd.v.scaled_add(-c, prev);
        }
        let norm = pd.v.dot(&pd.v).sqrt();
        if norm <= 1e-8 {
            warnings.push(format!("unsupervised-shortfall:{}/{}", chain.len(), k_total));
            return Ok(());
        }
        pd.v.mapv_inplace(|x| x / norm);
        fix_sign(&mut pd.v);
        let z = chain.x.dot(&pd.v);
        if (z.dot(&z) / (n - 1) as f64).sqrt() <= SD_FLOOR {
            warnings.push(format!("unsupervised-shortfall:{}/{}", chain.len(), k_total));
            return Ok(());
        }
        let score = latent_score(&z, target)?;
        tail_vs.push(pd.v.clone());
        chain.extract(
            pd.v,
            ExtractionMeta {
                kind: ComponentKind::Unsupervised,
                gamma: None,
                pvalue: None,
                score,
                source_class: None,
                degenerate: pd.degenerate,
            },
        )?;
    }
    Ok(())
}

/// Fits iterative supervised principal components.
///
/// Variant semantics: `naive` extracts `k_total` supervised components with
/// no permutation gate and stops early only on loss of signal; `small` runs
/// the gate before every extraction (including the first) and emits nothing
/// else; `full` additionally fills the remaining budget with unsupervised
/// components of the final deflated matrix.
pub fn ispca_fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    data.target
        .validate()
        .map_err(|e| Error::InvalidInput(format!("degenerate target: {e}")))?;
    if data.n_rows() < 2 {
        return Err(Error::InvalidInput("fitting needs at least 2 rows".into()));
    }
    let (x_std, params) = standardize(&data.features.view())?;
    if params.constant.iter().all(|&c| c) {
        return Err(Error::NoSignal("every feature column is constant".into()));
    }
    let mut chain = DeflationChain::new(x_std);
    let mut warnings = Vec::new();
    let gated = config.variant != Variant::Naive;

    while chain.len() < config.k_total {
        let pvalue = if gated {
            let gate_seed = rng::derive_seed(config.seed, rng::DOMAIN_GATE, chain.len() as u64);
            let p = permutation_pvalue(&chain.x.view(), &data.target, config.n_permutations, gate_seed)?;
            if p >= config.alpha {
                break;
            }
            Some(p)
        } else {
            None
        };
        let cand = match best_supervised_direction(&chain.x.view(), &data.target, config) {
            Ok(c) => c,
            Err(Error::NoSignal(_)) => {
                warnings.push(format!("supervised-shortfall:{}/{}", chain.len(), config.k_total));
                break;
            }
            Err(e) => return Err(e),
        };
        chain.extract(
            cand.v,
            ExtractionMeta {
                kind: ComponentKind::Supervised,
                gamma: Some(cand.gamma),
                pvalue,
                score: cand.score,
                source_class: cand.source_class,
                degenerate: cand.degenerate,
            },
        )?;
    }

    if config.variant == Variant::Full {
        extend_unsupervised(&mut chain, config.k_total, &data.target, &mut warnings)?;
    }

    let method = match config.variant {
        Variant::Naive => Method::IspcaNaive,
        Variant::Small => Method::IspcaSmall,
        Variant::Full => Method::Ispca,
    };
    Ok(chain.finish(data, params, method, config, warnings))
}
