//! Deterministic L2-regularized logistic regression.
//!
//! Binary targets are handled as the two-class case of multinomial softmax
//! regression with the last class as the reference, so one code path serves
//! both. The penalized negative log-likelihood is strictly convex for
//! `l2 > 0`, and a damped Newton iteration drives the gradient norm below
//! 1e-8. Intercepts are not penalized.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::data::Target;
use crate::error::{Error, Result};

const MAX_NEWTON_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;

/// Fitted classifier on latent features.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// `(C-1) x K` coefficients; the last class is the reference with zeros.
    pub coefficients: Array2<f64>,
    /// `C-1` intercepts.
    pub intercepts: Array1<f64>,
    pub l2: f64,
    pub iterations: usize,
}

fn class_indices(target: &Target) -> Result<(Vec<usize>, usize)> {
    match target {
        Target::Regression(_) => {
            Err(Error::InvalidInput("logistic regression needs a classification target".into()))
        }
        Target::Binary(y) => Ok((y.iter().map(|&b| b as usize).collect(), 2)),
        Target::Multiclass { labels, n_classes } => {
            Ok((labels.iter().map(|&l| l - 1).collect(), *n_classes))
        }
    }
}

/// Row-wise softmax of the logits with the reference class appended as a
/// zero logit.
fn probabilities(theta: &ArrayView1<f64>, z: &ArrayView2<f64>, n_classes: usize) -> Array2<f64> {
    let n = z.nrows();
    let k = z.ncols();
    let stride = k + 1;
    let mut probs = Array2::zeros((n, n_classes));
    for i in 0..n {
        let mut max_eta = 0.0f64; // reference logit
        for c in 0..n_classes - 1 {
            let base = c * stride;
            let mut eta = theta[base];
            for j in 0..k {
                eta += theta[base + 1 + j] * z[[i, j]];
            }
            probs[[i, c]] = eta;
            if eta > max_eta {
                max_eta = eta;
            }
        }
        probs[[i, n_classes - 1]] = 0.0;
        let mut total = 0.0;
        for c in 0..n_classes {
            let e = (probs[[i, c]] - max_eta).exp();
            probs[[i, c]] = e;
            total += e;
        }
        for c in 0..n_classes {
            probs[[i, c]] /= total;
        }
    }
    probs
}

fn penalized_nll(
    theta: &ArrayView1<f64>,
    probs: &Array2<f64>,
    classes: &[usize],
    k: usize,
    n_classes: usize,
    l2: f64,
) -> f64 {
    let stride = k + 1;
    let mut obj = 0.0;
    for (i, &c) in classes.iter().enumerate() {
        obj -= probs[[i, c]].max(1e-300).ln();
    }
    for c in 0..n_classes - 1 {
        for j in 0..k {
            let b = theta[c * stride + 1 + j];
            obj += 0.5 * l2 * b * b;
        }
    }
    obj
}

/// Value and gradient of the penalized negative log-likelihood at arbitrary
/// parameters. The layout is `[intercept_c, coef_c1..coef_cK]` per non-
/// reference class `c`, concatenated; the last class is the reference.
pub fn objective_and_gradient(
    theta: &ArrayView1<f64>,
    z: &ArrayView2<f64>,
    target: &Target,
    l2: f64,
) -> Result<(f64, Array1<f64>)> {
    let (classes, n_classes) = class_indices(target)?;
    let k = z.ncols();
    let stride = k + 1;
    let dim = (n_classes - 1) * stride;
    if theta.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "theta length {} but {} classes and {} features need {}",
            theta.len(),
            n_classes,
            k,
            dim
        )));
    }
    if z.nrows() != classes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs target length {}",
            z.nrows(),
            classes.len()
        )));
    }
    let probs = probabilities(theta, z, n_classes);
    let obj = penalized_nll(theta, &probs, &classes, k, n_classes, l2);
    let mut grad = Array1::zeros(dim);
    for (i, &yc) in classes.iter().enumerate() {
        for c in 0..n_classes - 1 {
            let resid = probs[[i, c]] - if yc == c { 1.0 } else { 0.0 };
            let base = c * stride;
            grad[base] += resid;
            for j in 0..k {
                grad[base + 1 + j] += resid * z[[i, j]];
            }
        }
    }
    for c in 0..n_classes - 1 {
        for j in 0..k {
            let idx = c * stride + 1 + j;
            grad[idx] += l2 * theta[idx];
        }
    }
    Ok((obj, grad))
}

fn hessian(
    theta: &ArrayView1<f64>,
    z: &ArrayView2<f64>,
    n_classes: usize,
    l2: f64,
) -> Array2<f64> {
    let n = z.nrows();
    let k = z.ncols();
    let stride = k + 1;
    let dim = (n_classes - 1) * stride;
    let probs = probabilities(theta, z, n_classes);
    let mut h = Array2::zeros((dim, dim));
    // design row including the intercept column
    let mut xi = vec![0.0; stride];
    for i in 0..n {
        xi[0] = 1.0;
        for j in 0..k {
            xi[1 + j] = z[[i, j]];
        }
        for c in 0..n_classes - 1 {
            for c2 in c..n_classes - 1 {
                let w = if c == c2 {
                    probs[[i, c]] * (1.0 - probs[[i, c]])
                } else {
                    -probs[[i, c]] * probs[[i, c2]]
                };
                if w == 0.0 {
                    continue;
                }
                for a in 0..stride {
                    let wa = w * xi[a];
                    for b in 0..stride {
                        h[[c * stride + a, c2 * stride + b]] += wa * xi[b];
                    }
                }
            }
        }
    }
    // mirror the upper class blocks
    for c in 0..n_classes - 1 {
        for c2 in (c + 1)..n_classes - 1 {
            for a in 0..stride {
                for b in 0..stride {
                    h[[c2 * stride + a, c * stride + b]] = h[[c * stride + b, c2 * stride + a]];
                }
            }
        }
    }
    for c in 0..n_classes - 1 {
        for j in 0..k {
            let idx = c * stride + 1 + j;
            h[[idx, idx]] += l2;
        }
    }
    h
}

fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for t in 0..j {
                sum -= l[[i, t]] * l[[j, t]];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for t in 0..i {
            sum -= l[[i, t]] * y[t];
        }
        y[i] = sum / l[[i, i]];
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for t in (i + 1)..n {
            sum -= l[[t, i]] * x[t];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Solves `H x = g`, adding a diagonal jitter only if the factorization
/// fails; the objective and gradient are never altered.
fn solve_newton_system(mut h: Array2<f64>, g: &Array1<f64>) -> Result<Array1<f64>> {
    let n = h.nrows();
    let trace: f64 = (0..n).map(|i| h[[i, i]]).sum();
    let scale = (trace / n as f64).max(1e-12);
    let mut jitter = 0.0;
    for _ in 0..8 {
        if jitter > 0.0 {
            for i in 0..n {
                h[[i, i]] += jitter;
            }
        }
        if let Some(l) = cholesky(&h) {
            return Ok(cholesky_solve(&l, g));
        }
        jitter = if jitter == 0.0 { scale * 1e-12 } else { jitter * 100.0 };
    }
    Err(Error::NonConvergence("newton system is numerically singular".into()))
}

/// Fits the penalized classifier to latent features `z`. Errors if the
/// Newton iteration cannot drive the gradient norm below 1e-8 within its
/// iteration cap.
pub fn fit_logistic(z: &ArrayView2<f64>, target: &Target, l2: f64) -> Result<LogisticModel> {
    if !l2.is_finite() || l2 <= 0.0 {
        return Err(Error::InvalidInput(format!("l2 must be positive, got {l2}")));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("latent features contain non-finite values".into()));
    }
    let (_, n_classes) = class_indices(target)?;
    let k = z.ncols();
    let stride = k + 1;
    let dim = (n_classes - 1) * stride;
    let mut theta = Array1::zeros(dim);
    let mut last_gnorm = f64::INFINITY;
    for iter in 0..MAX_NEWTON_ITER {
        let (obj, grad) = objective_and_gradient(&theta.view(), z, target, l2)?;
        let gnorm = grad.dot(&grad).sqrt();
        last_gnorm = gnorm;
        if gnorm < GRAD_TOL {
            return Ok(unpack_model(&theta, k, n_classes, l2, iter));
        }
        let h = hessian(&theta.view(), z, n_classes, l2);
        let step = solve_newton_system(h, &grad)?;
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &theta - &step.mapv(|s| s * t);
            let probs = probabilities(&cand.view(), z, n_classes);
            let (classes, _) = class_indices(target)?;
            let cand_obj = penalized_nll(&cand.view(), &probs, &classes, k, n_classes, l2);
            if cand_obj <= obj - 1e-4 * t * slope {
                theta = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence(format!(
                "line search stalled at iteration {iter}, |g| = {gnorm:.3e}"
            )));
        }
    }
    Err(Error::NonConvergence(format!(
        "newton hit {MAX_NEWTON_ITER} iterations, |g| = {last_gnorm:.3e}"
    )))
}

fn unpack_model(
    theta: &Array1<f64>,
    k: usize,
    n_classes: usize,
    l2: f64,
    iterations: usize,
) -> LogisticModel {
    let stride = k + 1;
    let mut coefficients = Array2::zeros((n_classes - 1, k));
    let mut intercepts = Array1::zeros(n_classes - 1);
    for c in 0..n_classes - 1 {
        intercepts[c] = theta[c * stride];
        for j in 0..k {
            coefficients[[c, j]] = theta[c * stride + 1 + j];
        }
    }
    LogisticModel { n_classes, n_features: k, coefficients, intercepts, l2, iterations }
}

impl LogisticModel {
    /// Class probabilities for latent rows, one column per class in class
    /// order (0, 1 for binary; 1..=C mapped to columns 0..C-1 for
    /// multiclass).
    pub fn predict_proba(&self, z: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.n_features {
            return Err(Error::DimensionMismatch(format!(
                "{} latent features but the classifier was fitted on {}",
                z.ncols(),
                self.n_features
            )));
        }
        let stride = self.n_features + 1;
        let mut theta = Array1::zeros((self.n_classes - 1) * stride);
        for c in 0..self.n_classes - 1 {
            theta[c * stride] = self.intercepts[c];
            for j in 0..self.n_features {
                theta[c * stride + 1 + j] = self.coefficients[[c, j]];
            }
        }
        Ok(probabilities(&theta.view(), z, self.n_classes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small_binary() -> (Array2<f64>, Target) {
        let z = array![[-2.0], [-1.5], [-0.6], [0.4], [1.2], [2.2]];
        let t = Target::Binary(vec![0, 0, 0, 1, 1, 1]);
        (z, t)
    }

    #[test]
    fn heavy_penalty_shrinks_to_class_frequencies() {
        let (z, t) = small_binary();
        let m = fit_logistic(&z.view(), &t, 1e9).unwrap();
        assert!(m.coefficients[[0, 0]].abs() < 1e-6);
        let p = m.predict_proba(&z.view()).unwrap();
        for i in 0..z.nrows() {
            assert!((p[[i, 1]] - 0.5).abs() < 1e-3, "p = {}", p[[i, 1]]);
        }
    }

    #[test]
    fn separable_data_monotone_probability() {
        let (z, t) = small_binary();
        let m = fit_logistic(&z.view(), &t, 0.1).unwrap();
        let p = m.predict_proba(&z.view()).unwrap();
        for i in 1..z.nrows() {
            assert!(p[[i, 1]] > p[[i - 1, 1]]);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let z = array![
            [0.5, -0.2],
            [-1.0, 0.8],
            [0.1, 0.4],
            [1.4, -0.9],
            [-0.3, -0.5],
            [0.9, 1.1]
        ];
        let t = Target::Multiclass { labels: vec![1, 2, 3, 1, 2, 3], n_classes: 3 };
        let l2 = 0.7;
        let theta = array![0.3, -0.4, 0.2, -0.1, 0.5, 0.15];
        let (_, grad) = objective_and_gradient(&theta.view(), &z.view(), &t, l2).unwrap();
        let h = 1e-6;
        for p in 0..theta.len() {
            let mut tp = theta.clone();
            tp[p] += h;
            let (fp, _) = objective_and_gradient(&tp.view(), &z.view(), &t, l2).unwrap();
            tp[p] -= 2.0 * h;
            let (fm, _) = objective_and_gradient(&tp.view(), &z.view(), &t, l2).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (grad[p] - fd).abs() <= 1e-6 * grad[p].abs().max(1.0),
                "param {p}: analytic {} vs fd {fd}",
                grad[p]
            );
        }
    }

    #[test]
    fn doubling_l2_never_helps_under_the_new_penalty() {
        let (z, t) = small_binary();
        for l2 in [0.01, 0.1, 1.0] {
            let m1 = fit_logistic(&z.view(), &t, l2).unwrap();
            let m2 = fit_logistic(&z.view(), &t, 2.0 * l2).unwrap();
            let pack = |m: &LogisticModel| {
                let stride = m.n_features + 1;
                let mut theta = Array1::zeros((m.n_classes - 1) * stride);
                for c in 0..m.n_classes - 1 {
                    theta[c * stride] = m.intercepts[c];
                    for j in 0..m.n_features {
                        theta[c * stride + 1 + j] = m.coefficients[[c, j]];
                    }
                }
                theta
            };
            let (f_opt, _) =
                objective_and_gradient(&pack(&m2).view(), &z.view(), &t, 2.0 * l2).unwrap();
            let (f_other, _) =
                objective_and_gradient(&pack(&m1).view(), &z.view(), &t, 2.0 * l2).unwrap();
            assert!(f_opt <= f_other + 1e-9);
        }
    }

    #[test]
    fn multiclass_probabilities_sum_to_one() {
        let z = array![[0.5, -0.2], [-1.0, 0.8], [0.1, 0.4], [1.4, -0.9]];
        let t = Target::Multiclass { labels: vec![1, 2, 3, 2], n_classes: 3 };
        let m = fit_logistic(&z.view(), &t, 0.5).unwrap();
        let p = m.predict_proba(&z.view()).unwrap();
        for i in 0..4 {
            let s: f64 = (0..3).map(|c| p[[i, c]]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn regression_target_is_rejected() {
        let z = array![[0.0], [1.0]];
        let t = Target::Regression(array![0.0, 1.0]);
        assert!(fit_logistic(&z.view(), &t, 1.0).is_err());
    }
}
