//! Shared oracles for the integration tests. Everything here is an
//! independent computation route: a dense Jacobi eigensolver, the naive
//! dense matrix-product construction of the projection vectors, and a
//! step-by-step replay of the fitting recursion on held-out rows.

#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::Distribution;

use ispca_core::ispca::FitResult;
use ispca_core::rng;
use ispca_core::DeflationRecord;

/// Jacobi eigenvalue iteration for small symmetric matrices. Returns
/// eigenvalues in descending order with matching eigenvector columns.
pub fn jacobi_eigh(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    for _ in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let evals: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap());
    let sorted: Vec<f64> = idx.iter().map(|&i| evals[i]).collect();
    let vecs = v.select(Axis(1), &idx);
    (sorted, vecs)
}

/// Top eigenvector of `X'X` through the Jacobi route, unit norm, sign free.
pub fn top_right_singular_vector(x: &ArrayView2<f64>) -> (Array1<f64>, f64) {
    let gram = x.t().dot(x);
    let (evals, vecs) = jacobi_eigh(&gram);
    (vecs.column(0).to_owned(), evals[0])
}

pub fn randn_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::substream(seed, 0);
    let normal = rand_distr::StandardNormal;
    Array2::from_shape_fn((n, d), |_| normal.sample(&mut r))
}

/// Random orthogonal matrix from Gram-Schmidt on a Gaussian square matrix.
pub fn random_orthogonal(d: usize, seed: u64) -> Array2<f64> {
    let g = randn_matrix(d, d, seed);
    let mut q: Array2<f64> = Array2::zeros((d, d));
    for j in 0..d {
        let mut col = g.column(j).to_owned();
        for prev in 0..j {
            let p = q.column(prev);
            let c = col.dot(&p);
            col.scaled_add(-c, &p);
        }
        let norm = col.dot(&col).sqrt();
        q.column_mut(j).assign(&col.mapv(|v| v / norm));
    }
    q
}

/// Naive dense construction of the projection vectors:
/// `w_k = (A_1 A_2 ... A_{k-1}) v_k` with `A_t = I - V_t B_t`, where `V_t`
/// has every column equal to `v_t` and `B_t = diag(b_t)`. Only sensible for
/// small feature counts.
pub fn dense_projection_oracle(
    vs: &[Array1<f64>],
    records: &[DeflationRecord],
) -> Vec<Array1<f64>> {
    let d = vs[0].len();
    let eye: Array2<f64> = Array2::eye(d);
    let mut out = Vec::with_capacity(vs.len());
    for (k, v) in vs.iter().enumerate() {
        let mut product = eye.clone();
        for t in 0..k {
            let mut a_t = eye.clone();
            for i in 0..d {
                for j in 0..d {
                    a_t[[i, j]] -= vs[t][i] * records[t].coefficients[j];
                }
            }
            product = product.dot(&a_t);
        }
        out.push(product.dot(v));
    }
    out
}

/// Step-by-step replay of the fitted recursion on held-out rows: standardize
/// with the training params, then per component project onto `v_k` and
/// deflate with the training coefficients; finally rescale by the training
/// z scales.
pub fn replay_transform(fit: &FitResult, x_raw: &ArrayView2<f64>) -> Array2<f64> {
    let mut x = ispca_core::apply_standardization(x_raw, &fit.model.standardization).unwrap();
    let n = x.nrows();
    let k = fit.components.len();
    let mut z_out = Array2::zeros((n, k));
    for (ki, comp) in fit.components.iter().enumerate() {
        let z = x.dot(&comp.v);
        let b = &fit.deflations[ki].coefficients;
        for (i, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
            row.scaled_add(-z[i], b);
        }
        let scale = fit.model.z_scales[ki];
        for i in 0..n {
            z_out[[i, ki]] = z[i] / scale;
        }
    }
    z_out
}

/// Relative off-diagonal magnitude of the Gram matrix of Z's columns.
pub fn max_offdiag_gram(z: &ArrayView2<f64>) -> f64 {
    let k = z.ncols();
    let gram = z.t().dot(z);
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let scale = (gram[[i, i]] * gram[[j, j]]).sqrt().max(1e-300);
                worst = worst.max(gram[[i, j]].abs() / scale);
            }
        }
    }
    worst
}
