//! Fitted projection models: configuration, per-component metadata, the
//! projection matrix, and the transforms it supports.
//!
//! A fitted model maps raw features to latent features as
//! `Z = standardize(X) * W / z_scales`, where the per-column scales make the
//! training latent features unit variance so that none is favored a priori
//! by downstream models.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::data::{apply_standardization, StandardizationParams, Target, TargetKind};
use crate::error::{Error, Result};

/// Which supervised loop the fit runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Extract `k_total` supervised components with no permutation gate;
    /// stops early only when the data runs out of signal.
    Naive,
    /// Supervised components only, gated by the permutation test.
    Small,
    /// Gated supervised components plus an unsupervised tail up to `k_total`.
    Full,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Naive => "naive",
            Variant::Small => "small",
            Variant::Full => "full",
        }
    }
}

/// Dimension-reduction method selector, as exposed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pca,
    Spca,
    Pspca,
    IspcaNaive,
    IspcaSmall,
    Ispca,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Pca,
        Method::Spca,
        Method::Pspca,
        Method::IspcaNaive,
        Method::IspcaSmall,
        Method::Ispca,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Spca => "spca",
            Method::Pspca => "pspca",
            Method::IspcaNaive => "ispca-naive",
            Method::IspcaSmall => "ispca-small",
            Method::Ispca => "ispca",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.as_str() == s)
    }

    /// Supervised-loop variant for the iterative methods.
    pub fn variant(&self) -> Option<Variant> {
        match self {
            Method::IspcaNaive => Some(Variant::Naive),
            Method::IspcaSmall => Some(Variant::Small),
            Method::Ispca => Some(Variant::Full),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fit-time configuration shared by all methods. Fields that a method does
/// not use (for example `alpha` under plain PCA) are carried along unchanged
/// so a fit can always be reproduced from the echo stored in its model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Permutation-test level for the supervised stopping rule.
    pub alpha: f64,
    /// Number of label permutations per test.
    pub n_permutations: usize,
    /// Size of the screening-threshold grid.
    pub grid_size: usize,
    /// Feature window limit: the loosest grid endpoint keeps at most this
    /// many features.
    pub window: usize,
    /// Total number of latent features to extract.
    pub k_total: usize,
    /// Supervised-loop variant for the iterative methods.
    pub variant: Variant,
    /// Master seed; every permutation and substream derives from it.
    pub seed: u64,
    /// Per-feature p-value threshold for SPCA-style screening.
    pub screening_level: f64,
}

impl FitConfig {
    /// Paper-default parameters for a given number of components.
    pub fn new(k_total: usize) -> Self {
        FitConfig {
            alpha: 0.01,
            n_permutations: 1000,
            grid_size: 10,
            window: 500,
            k_total,
            variant: Variant::Full,
            seed: 0,
            screening_level: 0.001,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// Default component budget: 50 for binary and regression targets,
    /// 20 for multiclass.
    pub fn default_k_total(target: &Target) -> usize {
        match target {
            Target::Multiclass { .. } => 20,
            _ => 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n_permutations == 0 {
            return Err(Error::InvalidInput("n_permutations must be at least 1".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidInput("grid_size must be at least 2".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidInput("window must be at least 1".into()));
        }
        if self.k_total == 0 {
            return Err(Error::InvalidInput("k_total must be at least 1".into()));
        }
        if !(self.screening_level > 0.0 && self.screening_level < 1.0) {
            return Err(Error::InvalidInput(format!(
                "screening_level must lie in (0, 1), got {}",
                self.screening_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Supervised,
    Unsupervised,
}

impl ComponentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComponentKind::Supervised => "supervised",
            ComponentKind::Unsupervised => "unsupervised",
        }
    }
}

/// One extracted direction with its diagnostics: the sparse direction `v` in
/// the deflated space it was found in (zero-padded to the full feature
/// count) and the dense direction `w` in the original standardized space.
#[derive(Debug, Clone)]
pub struct Component {
    pub v: Array1<f64>,
    pub w: Array1<f64>,
    pub kind: ComponentKind,
    /// Screening threshold the winning direction used (supervised only).
    pub gamma: Option<f64>,
    /// Gate p-value observed before this extraction (gated variants only).
    pub pvalue: Option<f64>,
    /// Achieved score S(z, y) of the latent feature against the target.
    pub score: f64,
    /// Winning one-vs-rest class for multiclass fits.
    pub source_class: Option<usize>,
    /// Power iteration hit its cap while computing this direction.
    pub degenerate: bool,
}

/// The serializable slice of [`Component`]: everything except the vectors,
/// which live in the model's projection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMeta {
    pub kind: ComponentKind,
    pub gamma: Option<f64>,
    pub pvalue: Option<f64>,
    pub score: f64,
    pub source_class: Option<usize>,
    pub degenerate: bool,
}

impl From<&Component> for ComponentMeta {
    fn from(c: &Component) -> Self {
        ComponentMeta {
            kind: c.kind,
            gamma: c.gamma,
            pvalue: c.pvalue,
            score: c.score,
            source_class: c.source_class,
            degenerate: c.degenerate,
        }
    }
}

/// A fitted dimension reduction: projection matrix, component metadata, the
/// standardization it was fit under, and unit-variance scales for Z.
#[derive(Debug, Clone)]
pub struct ProjectionModel {
    /// D x K projection matrix; column k holds `w_k`.
    pub w: Array2<f64>,
    pub components: Vec<ComponentMeta>,
    pub standardization: StandardizationParams,
    /// Sample sd of each training latent feature; transform divides by these.
    pub z_scales: Array1<f64>,
    pub method: Method,
    pub config: FitConfig,
    pub target_kind: TargetKind,
    /// External class names by class index, when the dataset carried them.
    pub label_map: Option<Vec<String>>,
    /// Machine-readable conditions hit during fitting, e.g.
    /// `empty-screen-pca-fallback` or `unsupervised-shortfall:8/10`.
    pub warnings: Vec<String>,
}

impl ProjectionModel {
    pub fn n_features(&self) -> usize {
        self.w.nrows()
    }

    /// Number of latent features actually fitted (may fall short of the
    /// requested `k_total` when rank runs out; see `warnings`).
    pub fn k_fitted(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_supervised(&self) -> usize {
        self.components
            .iter()
            .filter(|c| c.kind == ComponentKind::Supervised)
            .count()
    }

    /// Latent features for raw (unstandardized) rows: standardize with the
    /// stored params, project through W, and rescale each column to the
    /// training unit variance.
    pub fn transform(&self, x_raw: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let x_std = apply_standardization(x_raw, &self.standardization)?;
        let mut z = x_std.dot(&self.w);
        for (k, mut col) in z.columns_mut().into_iter().enumerate() {
            let s = self.z_scales[k];
            if s > 0.0 {
                col.mapv_inplace(|v| v / s);
            }
        }
        Ok(z)
    }

    /// Maps coefficients of a linear model on Z back to the original
    /// standardized feature space: `beta = W * diag(z_scales)^-1 * beta_z`,
    /// so that `X_std * beta` equals `Z * beta_z` row for row. An intercept
    /// is unaffected by the projection and passes through unchanged.
    pub fn back_transform_coefficients(&self, beta_z: &ArrayView1<f64>) -> Result<Array1<f64>> {
        if beta_z.len() != self.k_fitted() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector has length {} but the model has {} components",
                beta_z.len(),
                self.k_fitted()
            )));
        }
        let scaled: Array1<f64> = beta_z
            .iter()
            .zip(self.z_scales.iter())
            .map(|(&b, &s)| if s > 0.0 { b / s } else { 0.0 })
            .collect();
        Ok(self.w.dot(&scaled))
    }
}
