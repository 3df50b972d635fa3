//! Supervised PCA baseline (screen once, then PCA on the survivors), its
//! partially supervised variant with an orthogonalized unsupervised tail,
//! and plain PCA expressed in the same model form.
//!
//! Screening keeps the features whose per-feature permutation p-value falls
//! below the screening level. Components are extracted through the shared
//! deflation chain so that the latent features of every method are mutually
//! orthogonal and reproducible from the projection matrix alone.

use ndarray::{Array1, ArrayView2, Axis};

use crate::data::{standardize, Dataset, Target};
use crate::error::{Error, Result};
use crate::ispca::{extend_unsupervised, DeflationChain, ExtractionMeta, FitResult};
use crate::model::{ComponentKind, FitConfig, Method};
use crate::pca::{fix_sign, leading_pc};
use crate::rng;
use crate::scoring;

/// Outcome of the screening step.
#[derive(Debug, Clone)]
pub struct ScreeningResult {
    /// Indices of features with `p < threshold`, ascending.
    pub kept: Vec<usize>,
    /// The p-value screening level applied.
    pub threshold: f64,
    pub pvalues: Array1<f64>,
}

/// Per-feature permutation screening: keeps features whose p-value is below
/// `level`. Multiclass targets are screened on the max-combined score with
/// the raw labels permuted before encoding.
pub fn screen(
    x_std: &ArrayView2<f64>,
    target: &Target,
    level: f64,
    n_permutations: usize,
    seed: u64,
) -> Result<ScreeningResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("screening level must lie in (0, 1), got {level}")));
    }
    let pvalues = scoring::feature_pvalues(x_std, target, n_permutations, seed)?;
    let kept = pvalues
        .iter()
        .enumerate()
        .filter(|(_, &p)| p < level)
        .map(|(j, _)| j)
        .collect();
    Ok(ScreeningResult { kept, threshold: level, pvalues })
}

/// Extracts principal components of the matrix restricted to `kept`,
/// zero-padded to full width, until the chain holds `k_total` components or
/// the screened submatrix runs out of rank.
fn extend_screened(
    chain: &mut DeflationChain,
    kept: &[usize],
    k_total: usize,
    target: &Target,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let d = chain.x.ncols();
    let mut local_vs: Vec<Array1<f64>> = Vec::new();
    while chain.len() < k_total {
        let sub = chain.x.select(Axis(1), kept);
        let pd = match leading_pc(&sub.view()) {
            Ok(pd) => pd,
            Err(Error::NoSignal(_)) => {
                warnings.push(format!("supervised-shortfall:{}/{k_total}", chain.len()));
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let mut v = Array1::zeros(d);
        for (i, &j) in kept.iter().enumerate() {
            v[j] = pd.v[i];
        }
        for prev in &local_vs {
            let c = v.dot(prev);
            v.scaled_add(-c, prev);
        }
        let norm = v.dot(&v).sqrt();
        if norm <= 1e-8 {
            warnings.push(format!("supervised-shortfall:{}/{k_total}", chain.len()));
            return Ok(());
        }
        v.mapv_inplace(|x| x / norm);
        fix_sign(&mut v);
        let z = chain.x.dot(&v);
        let score = scoring::target_scores(&z.view().insert_axis(Axis(1)), target)?[0];
        local_vs.push(v.clone());
        chain.extract(
            v,
            ExtractionMeta {
                kind: ComponentKind::Supervised,
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

fn prepare(data: &Dataset, config: &FitConfig) -> Result<(DeflationChain, crate::data::StandardizationParams)> {
    config.validate()?;
    if data.n_rows() < 2 {
        return Err(Error::InvalidInput("fitting needs at least 2 rows".into()));
    }
    let (x_std, params) = standardize(&data.features.view())?;
    if params.constant.iter().all(|&c| c) {
        return Err(Error::NoSignal("every feature column is constant".into()));
    }
    Ok((DeflationChain::new(x_std), params))
}

/// Plain PCA in projection-model form: the first `k_total` unsupervised
/// components of the standardized matrix.
pub fn pca_fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    let (mut chain, params) = prepare(data, config)?;
    let mut warnings = Vec::new();
    extend_unsupervised(&mut chain, config.k_total, &data.target, &mut warnings)?;
    Ok(chain.finish(data, params, Method::Pca, config, warnings))
}

/// Supervised PCA: screen by per-feature permutation p-values, then take the
/// first `k_total` principal components of the surviving features. An empty
/// screen falls back to plain PCA on all features with a warning flag so the
/// fit still produces a model on null data.
pub fn spca_fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    data.target
        .validate()
        .map_err(|e| Error::InvalidInput(format!("degenerate target: {e}")))?;
    let (mut chain, params) = prepare(data, config)?;
    let seed = rng::derive_seed(config.seed, rng::DOMAIN_SCREEN, 0);
    let screening = screen(
        &chain.x.view(),
        &data.target,
        config.screening_level,
        config.n_permutations,
        seed,
    )?;
    let mut warnings = Vec::new();
    if screening.kept.is_empty() {
        warnings.push("empty-screen-pca-fallback".to_string());
        extend_unsupervised(&mut chain, config.k_total, &data.target, &mut warnings)?;
    } else {
        extend_screened(&mut chain, &screening.kept, config.k_total, &data.target, &mut warnings)?;
    }
    Ok(chain.finish(data, params, Method::Spca, config, warnings))
}

/// Partially supervised PCA: the first `ceil(k_total / 2)` components as in
/// [`spca_fit`], then unsupervised components of the full matrix after the
/// supervised variation has been deflated away, keeping all latent features
/// mutually orthogonal.
pub fn pspca_fit(data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    data.target
        .validate()
        .map_err(|e| Error::InvalidInput(format!("degenerate target: {e}")))?;
    let (mut chain, params) = prepare(data, config)?;
    let seed = rng::derive_seed(config.seed, rng::DOMAIN_SCREEN, 0);
    let screening = screen(
        &chain.x.view(),
        &data.target,
        config.screening_level,
        config.n_permutations,
        seed,
    )?;
    let mut warnings = Vec::new();
    if screening.kept.is_empty() {
        warnings.push("empty-screen-pca-fallback".to_string());
    } else {
        let n_supervised = config.k_total.div_ceil(2);
        extend_screened(&mut chain, &screening.kept, n_supervised, &data.target, &mut warnings)?;
    }
    extend_unsupervised(&mut chain, config.k_total, &data.target, &mut warnings)?;
    Ok(chain.finish(data, params, Method::Pspca, config, warnings))
}
