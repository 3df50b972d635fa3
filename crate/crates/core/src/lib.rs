//! Iterative supervised principal components.
//!
//! A supervised dimension-reduction toolkit: plain PCA, supervised PCA
//! (screen-then-PCA) with a partially supervised variant, and the iterative
//! supervised algorithm that alternates a screened principal-component
//! search with matrix deflation, stopping on a permutation test. Fitted
//! models project raw feature rows onto mutually orthogonal latent features
//! and map linear-model coefficients back to the original feature space.
//!
//! The evaluation harness adds synthetic generators, an L2-regularized
//! logistic/softmax classifier, and a repeated stratified-split protocol
//! for comparing the reduction methods on a downstream classifier.
//!
//! Everything is deterministic given the master seed: all randomness flows
//! through per-consumer ChaCha8 substreams.

pub mod data;
pub mod error;
pub mod eval;
pub mod ispca;
pub mod logistic;
pub mod model;
pub mod pca;
pub mod rng;
pub mod scoring;
pub mod spca;

pub use data::{
    apply_standardization, one_vs_rest, standardize, Dataset, StandardizationParams, Target,
    TargetKind, SD_FLOOR,
};
pub use error::{Error, Result};
pub use ispca::{
    best_supervised_direction, deflate, gamma_grid, ispca_fit, permutation_pvalue,
    projection_vectors, DeflationRecord, FitResult, SupervisedCandidate,
};
pub use model::{
    Component, ComponentKind, ComponentMeta, FitConfig, Method, ProjectionModel, Variant,
};
pub use pca::{leading_pc, principal_components, PrincipalDirection};
pub use scoring::{feature_pvalues, multiclass_scores, score, scores};
pub use spca::{pca_fit, pspca_fit, spca_fit, screen, ScreeningResult};

/// Fits the requested dimension-reduction method. The iterative methods
/// force the matching supervised-loop variant regardless of
/// `config.variant`.
pub fn fit(method: Method, data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    match method {
        Method::Pca => spca::pca_fit(data, config),
        Method::Spca => spca::spca_fit(data, config),
        Method::Pspca => spca::pspca_fit(data, config),
        Method::IspcaNaive => {
            ispca::ispca_fit(data, &config.clone().with_variant(Variant::Naive))
        }
        Method::IspcaSmall => {
            ispca::ispca_fit(data, &config.clone().with_variant(Variant::Small))
        }
        Method::Ispca => ispca::ispca_fit(data, &config.clone().with_variant(Variant::Full)),
    }
}
