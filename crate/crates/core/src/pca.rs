//! Leading principal components by power iteration.
//!
//! Works on centered matrices (standardization or deflation happens
//! upstream). Iterates on whichever Gram matrix is smaller: `X'X` when the
//! column count is at most the row count, otherwise `XX'` with the result
//! mapped back through `X'`. The starting vector is the normalized
//! column-sd vector, which is data dependent but seed free, so the output
//! is deterministic.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::data::SD_FLOOR;
use crate::error::{Error, Result};

/// Relative tolerance on the direction change between iterations.
pub const POWER_TOL: f64 = 1e-10;
/// Iteration cap; hitting it marks the result degenerate instead of failing,
/// since any vector in the top eigenspace is an acceptable maximizer.
pub const POWER_MAX_ITER: usize = 1000;

/// A unit direction of maximal projected variance.
#[derive(Debug, Clone)]
pub struct PrincipalDirection {
    /// Unit vector in the column space of the input (zero-padded by callers
    /// that screened columns out).
    pub v: Array1<f64>,
    /// Sample variance of the projection `Xv` (n-1 denominator).
    pub explained_variance: f64,
    /// Set when power iteration hit its cap without meeting [`POWER_TOL`],
    /// which happens when the top of the spectrum is (nearly) tied.
    pub degenerate: bool,
}

/// Sign convention: the entry of largest absolute value is positive, ties
/// broken by lowest index.
pub(crate) fn fix_sign(v: &mut Array1<f64>) {
    let mut arg = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            arg = i;
        }
    }
    if v[arg] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

fn normalize(v: &mut Array1<f64>) -> f64 {
    let norm = v.dot(v).sqrt();
    if norm > 0.0 {
        v.mapv_inplace(|x| x / norm);
    }
    norm
}

/// Power iteration on a PSD matrix from a given start; returns the final
/// iterate, its Rayleigh quotient, and whether the tolerance was met.
fn power_iterate(gram: &Array2<f64>, start: Array1<f64>) -> (Array1<f64>, f64, bool) {
    let mut v = start;
    let mut converged = false;
    for _ in 0..POWER_MAX_ITER {
        let mut next = gram.dot(&v);
        if normalize(&mut next) == 0.0 {
            // start was in the null space; caller retries with a fallback
            return (v, 0.0, false);
        }
        let diff = &next - &v;
        let close = diff.dot(&diff).sqrt() < POWER_TOL;
        v = next;
        if close {
            converged = true;
            break;
        }
    }
    let rayleigh = v.dot(&gram.dot(&v));
    (v, rayleigh, converged)
}

/// Candidate start vectors, tried in order until one has a nonzero image
/// under the Gram matrix.
fn start_candidates(x: &ArrayView2<f64>, iterate_rows: bool) -> Vec<Array1<f64>> {
    let (n, d) = (x.nrows(), x.ncols());
    let denom = (n - 1) as f64;
    let mut sds: Array1<f64> = (0..d)
        .map(|j| {
            let col = x.column(j);
            let mean = col.sum() / n as f64;
            (col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / denom).sqrt()
        })
        .collect();
    normalize(&mut sds);
    let dim = if iterate_rows { n } else { d };
    let mut cands = Vec::new();
    if iterate_rows {
        let mut mapped = x.dot(&sds);
        if normalize(&mut mapped) > 0.0 {
            cands.push(mapped);
        }
    } else {
        cands.push(sds);
    }
    cands.push(Array1::from_elem(dim, 1.0 / (dim as f64).sqrt()));
    cands
}

/// Dominant right singular direction of a centered matrix.
///
/// Errors with [`Error::NoSignal`] when every column is constant at the
/// [`SD_FLOOR`] level.
pub fn leading_pc(x: &ArrayView2<f64>) -> Result<PrincipalDirection> {
    let (n, d) = (x.nrows(), x.ncols());
    if n < 2 || d == 0 {
        return Err(Error::InvalidInput(format!("leading_pc on a {n}x{d} matrix")));
    }
    let max_norm = (0..d)
        .map(|j| x.column(j).dot(&x.column(j)).sqrt())
        .fold(0.0f64, f64::max);
    if (max_norm / ((n - 1) as f64).sqrt()) <= SD_FLOOR {
        return Err(Error::NoSignal("matrix has no non-constant column".into()));
    }

    let iterate_rows = n < d;
    let gram = if iterate_rows {
        x.dot(&x.t())
    } else {
        x.t().dot(x)
    };
    // A start vector can sit (to rounding) in the null space of a
    // rank-deficient Gram matrix, in which case the iteration stalls on a
    // direction of numerically zero variance. The top eigenvalue is at least
    // trace/dim, so an iterate whose Rayleigh quotient is negligible against
    // the trace is such a stall; fall through to the next start candidate.
    let trace: f64 = (0..gram.nrows()).map(|i| gram[[i, i]]).sum();
    let floor = trace * 1e-9;
    let mut attempt = None;
    for start in start_candidates(x, iterate_rows) {
        let (vec, rayleigh, converged) = power_iterate(&gram, start);
        if rayleigh > floor {
            attempt = Some((vec, rayleigh, converged));
            break;
        }
    }
    if attempt.is_none() {
        // basis-vector starts: some image is nonzero because the matrix is
        let dim = gram.nrows();
        for i in 0..dim {
            let mut e = Array1::zeros(dim);
            e[i] = 1.0;
            let (vec, rayleigh, converged) = power_iterate(&gram, e);
            if rayleigh > floor {
                attempt = Some((vec, rayleigh, converged));
                break;
            }
        }
    }
    let (vec, rayleigh, converged) =
        attempt.ok_or_else(|| Error::NoSignal("matrix is numerically zero".into()))?;

    let (mut v, lambda) = if iterate_rows {
        let mut back = x.t().dot(&vec);
        let norm = normalize(&mut back);
        if norm == 0.0 {
            return Err(Error::NoSignal("left singular vector maps to zero".into()));
        }
        (back, rayleigh)
    } else {
        (vec, rayleigh)
    };
    fix_sign(&mut v);
    Ok(PrincipalDirection {
        v,
        explained_variance: lambda / (n - 1) as f64,
        degenerate: !converged,
    })
}

/// First `k` principal directions, mutually orthonormal, in nonincreasing
/// explained-variance order. Computed by repeated [`leading_pc`] with
/// projection deflation; each new direction is re-orthogonalized against the
/// accepted ones so the orthonormality contract holds exactly.
///
/// Requires `k <= min(n-1, d)`. If the matrix runs out of rank earlier the
/// achievable prefix is returned, so a shorter result reports the shortfall.
pub fn principal_components(x: &ArrayView2<f64>, k: usize) -> Result<Vec<PrincipalDirection>> {
    let (n, d) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(Error::InvalidInput("principal_components needs at least 2 rows".into()));
    }
    if k > (n - 1).min(d) {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds min(n-1, d) = {}",
            (n - 1).min(d)
        )));
    }
    let mut work = x.to_owned();
    let mut out: Vec<PrincipalDirection> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut pd = match leading_pc(&work.view()) {
            Ok(pd) => pd,
            Err(Error::NoSignal(_)) => break, // rank exhausted
            Err(e) => return Err(e),
        };
        for prev in &out {
            let c = pd.v.dot(&prev.v);
            pd.v.scaled_add(-c, &prev.v);
        }
        if normalize(&mut pd.v) <= 1e-8 {
            break;
        }
        fix_sign(&mut pd.v);
        let z = work.dot(&pd.v);
        let znorm_sq = z.dot(&z);
        if (znorm_sq / (n - 1) as f64).sqrt() <= SD_FLOOR {
            break;
        }
        pd.explained_variance = znorm_sq / (n - 1) as f64;
        // deflate: subtract each column's projection onto z
        let b = work.t().dot(&z) / znorm_sq;
        for (i, mut row) in work.axis_iter_mut(Axis(0)).enumerate() {
            row.scaled_add(-z[i], &b);
        }
        out.push(pd);
    }
    Ok(out)
}
