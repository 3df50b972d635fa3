//! Matrices, targets, standardization and one-vs-rest encoding.
//!
//! Feature matrices are dense `ndarray::Array2<f64>` with rows as
//! observations and columns as features. Everything downstream of
//! [`standardize`] assumes columns with zero mean and (where non-constant)
//! unit variance. All types are immutable after construction and the
//! operations here are pure functions.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Zero-variance floor on column standard deviations. A column whose sample
/// sd is at or below this is treated as constant: it standardizes to zeros
/// and scores as 0. Deflation legitimately drives columns here mid-algorithm,
/// so this is a data condition rather than an error.
pub const SD_FLOOR: f64 = 1e-12;

/// Response variable attached to a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Real-valued response.
    Regression(Array1<f64>),
    /// Binary labels coded 0/1.
    Binary(Vec<u8>),
    /// Labels in `1..=n_classes` with a contiguous label set.
    Multiclass { labels: Vec<usize>, n_classes: usize },
}

/// Shape of a target, without the values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Regression,
    Binary,
    Multiclass(usize),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Regression(y) => y.len(),
            Target::Binary(y) => y.len(),
            Target::Multiclass { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> TargetKind {
        match self {
            Target::Regression(_) => TargetKind::Regression,
            Target::Binary(_) => TargetKind::Binary,
            Target::Multiclass { n_classes, .. } => TargetKind::Multiclass(*n_classes),
        }
    }

    /// Number of classes for classification targets.
    pub fn n_classes(&self) -> Option<usize> {
        match self {
            Target::Regression(_) => None,
            Target::Binary(_) => Some(2),
            Target::Multiclass { n_classes, .. } => Some(*n_classes),
        }
    }

    /// Class index of observation `i`, 0-based, for classification targets.
    pub fn class_index(&self, i: usize) -> Option<usize> {
        match self {
            Target::Regression(_) => None,
            Target::Binary(y) => Some(y[i] as usize),
            Target::Multiclass { labels, .. } => Some(labels[i] - 1),
        }
    }

    /// Numeric representation used for univariate scoring: regression values
    /// or raw 0/1 indicators. Multiclass targets are scored per class via
    /// [`one_vs_rest`] instead.
    pub fn numeric(&self) -> Option<Array1<f64>> {
        match self {
            Target::Regression(y) => Some(y.clone()),
            Target::Binary(y) => Some(y.iter().map(|&b| f64::from(b)).collect()),
            Target::Multiclass { .. } => None,
        }
    }

    /// Checks the invariants fitting relies on: finite values, at least two
    /// distinct labels, a contiguous multiclass label set.
    pub fn validate(&self) -> Result<()> {
        match self {
            Target::Regression(y) => {
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("regression target has non-finite values".into()));
                }
                let first = y[0];
                if y.iter().all(|&v| v == first) {
                    return Err(Error::InvalidInput("regression target is constant".into()));
                }
            }
            Target::Binary(y) => {
                if y.iter().any(|&b| b > 1) {
                    return Err(Error::InvalidInput("binary labels must be 0 or 1".into()));
                }
                let ones = y.iter().filter(|&&b| b == 1).count();
                if ones == 0 || ones == y.len() {
                    return Err(Error::InvalidInput("binary target has a single class".into()));
                }
            }
            Target::Multiclass { labels, n_classes } => {
                if *n_classes < 2 {
                    return Err(Error::InvalidInput("multiclass target needs at least 2 classes".into()));
                }
                let mut seen = vec![false; *n_classes];
                for &l in labels {
                    if l < 1 || l > *n_classes {
                        return Err(Error::InvalidInput(format!(
                            "label {l} outside 1..={n_classes}"
                        )));
                    }
                    seen[l - 1] = true;
                }
                if !seen.iter().all(|&s| s) {
                    return Err(Error::InvalidInput(
                        "multiclass label set is not contiguous: some class in 1..=C is absent".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Row subset of the target, preserving the target kind.
    pub fn select(&self, rows: &[usize]) -> Target {
        match self {
            Target::Regression(y) => Target::Regression(rows.iter().map(|&i| y[i]).collect()),
            Target::Binary(y) => Target::Binary(rows.iter().map(|&i| y[i]).collect()),
            Target::Multiclass { labels, n_classes } => Target::Multiclass {
                labels: rows.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
        }
    }
}

/// A feature matrix with its target.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub target: Target,
    /// External names of the classes, indexed by class (0-based for binary,
    /// `label - 1` for multiclass). Populated by file loaders.
    pub label_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset, checking row-count agreement and finiteness.
    pub fn new(features: Array2<f64>, target: Target) -> Result<Self> {
        if features.nrows() != target.len() {
            return Err(Error::DimensionMismatch(format!(
                "feature rows ({}) != target length ({})",
                features.nrows(),
                target.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature matrix has non-finite entries".into()));
        }
        Ok(Dataset { features, target, label_names: None })
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Self {
        self.label_names = Some(names);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Row subset as a new dataset.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            target: self.target.select(rows),
            label_names: self.label_names.clone(),
        }
    }
}

/// Per-column means and standard deviations fixed on the training matrix,
/// enabling train/test-consistent transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub means: Array1<f64>,
    /// Sample standard deviations (n-1 denominator) as computed, including
    /// for constant columns.
    pub sds: Array1<f64>,
    /// Marks columns whose sd was at or below [`SD_FLOOR`]; those columns
    /// map to zeros instead of dividing by a degenerate sd.
    pub constant: Vec<bool>,
}

impl StandardizationParams {
    pub fn dim(&self) -> usize {
        self.means.len()
    }
}

/// Centers and scales every column to mean 0, variance 1 (sample variance,
/// n-1 denominator). Columns with sd at or below [`SD_FLOOR`] become all
/// zeros and are flagged constant in the returned params.
pub fn standardize(x: &ArrayView2<f64>) -> Result<(Array2<f64>, StandardizationParams)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "standardize needs at least 2 rows, got {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let d = x.ncols();
    let mut means = Array1::zeros(d);
    let mut sds = Array1::zeros(d);
    let mut constant = vec![false; d];
    for j in 0..d {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|&v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        means[j] = mean;
        sds[j] = sd;
        constant[j] = sd <= SD_FLOOR;
    }
    let params = StandardizationParams { means, sds, constant };
    let out = apply_params(x, &params);
    Ok((out, params))
}

/// Applies previously computed standardization to a (possibly held-out)
/// matrix with the same column count.
pub fn apply_standardization(
    x: &ArrayView2<f64>,
    params: &StandardizationParams,
) -> Result<Array2<f64>> {
    if x.ncols() != params.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns but params describe {}",
            x.ncols(),
            params.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(apply_params(x, params))
}

fn apply_params(x: &ArrayView2<f64>, params: &StandardizationParams) -> Array2<f64> {
    let mut out = Array2::zeros(x.raw_dim());
    for j in 0..x.ncols() {
        if params.constant[j] {
            continue; // stays zero
        }
        let mean = params.means[j];
        let inv = 1.0 / params.sds[j];
        for (o, &v) in out.column_mut(j).iter_mut().zip(x.column(j).iter()) {
            *o = (v - mean) * inv;
        }
    }
    out
}

/// Indicator vector "class c vs. the rest" for a multiclass target, as reals.
pub fn one_vs_rest(target: &Target, class: usize) -> Result<Array1<f64>> {
    match target {
        Target::Multiclass { labels, n_classes } => {
            if class < 1 || class > *n_classes {
                return Err(Error::InvalidInput(format!(
                    "class {class} outside label set 1..={n_classes}"
                )));
            }
            Ok(labels.iter().map(|&l| if l == class { 1.0 } else { 0.0 }).collect())
        }
        _ => Err(Error::InvalidInput("one_vs_rest expects a multiclass target".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardize_symmetric_three_point_column() {
        let x = array![[1.0], [2.0], [3.0]];
        let (z, p) = standardize(&x.view()).unwrap();
        assert_eq!(p.means[0], 2.0);
        assert_eq!(p.sds[0], 1.0);
        assert_eq!(z.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_constant_column_flags_and_zeros() {
        let x = array![[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]];
        let (z, p) = standardize(&x.view()).unwrap();
        assert!(p.constant[0]);
        assert!(!p.constant[1]);
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_matches_two_pass_oracle() {
        // Direct two-pass mean/sd oracle on (1, 2, 3, 10).
        let vals = [1.0, 2.0, 3.0, 10.0];
        let mean = vals.iter().sum::<f64>() / 4.0;
        let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / 3.0).sqrt();
        let x = Array2::from_shape_vec((4, 1), vals.to_vec()).unwrap();
        let (z, p) = standardize(&x.view()).unwrap();
        assert_eq!(p.means[0], mean);
        assert_eq!(p.sds[0], sd);
        for (i, v) in vals.iter().enumerate() {
            assert!((z[[i, 0]] - (v - mean) / sd).abs() < 1e-15);
        }
    }

    #[test]
    fn standardize_rejects_single_row() {
        let x = array![[1.0, 2.0]];
        assert!(matches!(standardize(&x.view()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn apply_standardization_is_fixed_point_on_source() {
        let x = array![[1.0, 4.0], [2.0, -1.0], [3.0, 0.5], [0.0, 2.0]];
        let (z, p) = standardize(&x.view()).unwrap();
        let z2 = apply_standardization(&x.view(), &p).unwrap();
        assert_eq!(z, z2);
    }

    #[test]
    fn apply_standardization_identity_params() {
        let p = StandardizationParams {
            means: array![0.0, 0.0],
            sds: array![1.0, 1.0],
            constant: vec![false, false],
        };
        let x = array![[1.5, -2.0], [0.0, 3.0]];
        assert_eq!(apply_standardization(&x.view(), &p).unwrap(), x);
    }

    #[test]
    fn apply_standardization_held_out_row() {
        let p = StandardizationParams {
            means: array![2.0],
            sds: array![1.0],
            constant: vec![false],
        };
        let x = array![[4.0]];
        assert_eq!(apply_standardization(&x.view(), &p).unwrap()[[0, 0]], 2.0);
    }

    #[test]
    fn apply_standardization_dimension_mismatch() {
        let p = StandardizationParams {
            means: array![0.0],
            sds: array![1.0],
            constant: vec![false],
        };
        let x = array![[1.0, 2.0]];
        assert!(matches!(
            apply_standardization(&x.view(), &p),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn one_vs_rest_examples() {
        let y = Target::Multiclass { labels: vec![1, 2, 3, 1], n_classes: 3 };
        assert_eq!(one_vs_rest(&y, 1).unwrap().to_vec(), vec![1.0, 0.0, 0.0, 1.0]);
        let y2 = Target::Multiclass { labels: vec![1, 2], n_classes: 2 };
        assert_eq!(one_vs_rest(&y2, 2).unwrap().to_vec(), vec![0.0, 1.0]);
        assert!(one_vs_rest(&y2, 3).is_err());
    }

    #[test]
    fn one_vs_rest_partitions_indices() {
        let y = Target::Multiclass { labels: vec![2, 1, 3, 3, 2, 1], n_classes: 3 };
        let mut total = Array1::<f64>::zeros(6);
        for c in 1..=3 {
            total = total + one_vs_rest(&y, c).unwrap();
        }
        assert!(total.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn target_validation_catches_degenerates() {
        assert!(Target::Binary(vec![1, 1, 1]).validate().is_err());
        assert!(Target::Regression(array![2.0, 2.0]).validate().is_err());
        assert!(Target::Multiclass { labels: vec![1, 3], n_classes: 3 }.validate().is_err());
        assert!(Target::Multiclass { labels: vec![1, 2, 3], n_classes: 3 }.validate().is_ok());
    }
}
