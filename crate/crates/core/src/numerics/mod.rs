//! Dense linear algebra shared by the likelihood, sampler and filters.
//!
//! All symmetric positive semidefinite systems go through [`psd_factor`],
//! which applies a fixed jitter ladder before giving up, so near-singular
//! Gram matrices (long windows, smooth kernels) still factor.

mod sliding;
mod toeplitz;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use sliding::SlidingBlockInverse;
pub use toeplitz::{toeplitz_color, toeplitz_whiten, DurbinLevinson, Whitened};

/// Jitter levels tried in order, as multiples of the mean diagonal.
pub const JITTER_LADDER: [f64; 5] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];

/// Inner systems of [`smw_inverse`] above this condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

const SYMMETRY_TOL: f64 = 1e-10;

/// Cholesky factor of `K + jitter·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFactor {
    lower: DMatrix<f64>,
    jitter_used: f64,
}

impl PsdFactor {
    /// Lower-triangular `L` with strictly positive diagonal.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        solve_psd(self, rhs)
    }

    pub fn solve_vec(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::invalid(format!(
                "right-hand side has {} rows, factor is {}x{}",
                rhs.len(),
                self.dim(),
                self.dim()
            )));
        }
        let y = self
            .lower
            .solve_lower_triangular(rhs)
            .ok_or_else(|| Error::numerical("singular triangular factor"))?;
        self.lower
            .tr_solve_lower_triangular(&y)
            .ok_or_else(|| Error::numerical("singular triangular factor"))
    }

    /// `(K + jitter·I)⁻¹`.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut inv = solve_psd(self, &DMatrix::identity(n, n))?;
        symmetrize(&mut inv);
        Ok(inv)
    }

    pub fn logdet(&self) -> f64 {
        logdet(self)
    }
}

/// Runs `attempt` with each jitter level (scaled by `scale`) until it succeeds.
pub(crate) fn with_jitter_ladder<T>(
    scale: f64,
    mut attempt: impl FnMut(f64) -> Option<T>,
) -> Option<(T, f64)> {
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 0.0 };
    let mut last = None;
    for level in JITTER_LADDER {
        let jitter = level * scale;
        if last == Some(jitter) {
            continue;
        }
        last = Some(jitter);
        if let Some(out) = attempt(jitter) {
            return Some((out, jitter));
        }
    }
    None
}

fn cholesky_with_jitter(matrix: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let n = matrix.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = matrix[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d.is_finite() && d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = matrix[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

pub(crate) fn check_symmetric(matrix: &DMatrix<f64>) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let scale = matrix.amax().max(1.0);
    let n = matrix.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    matrix[(i, j)],
                    matrix[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Cholesky factorization with jitter escalation.
///
/// Tries `K + j·mean(diag K)·I` for `j` in [`JITTER_LADDER`] and returns the
/// first factor whose pivots are all strictly positive.
pub fn psd_factor(matrix: &DMatrix<f64>) -> Result<PsdFactor> {
    check_symmetric(matrix)?;
    let n = matrix.nrows();
    if n == 0 {
        return Ok(PsdFactor {
            lower: DMatrix::zeros(0, 0),
            jitter_used: 0.0,
        });
    }
    let mean_diag = matrix.diagonal().mean();
    with_jitter_ladder(mean_diag, |jitter| cholesky_with_jitter(matrix, jitter))
        .map(|(lower, jitter_used)| PsdFactor { lower, jitter_used })
        .ok_or_else(|| {
            Error::numerical(format!(
                "{n}x{n} matrix is not positive semidefinite (Cholesky failed at every jitter level)"
            ))
        })
}

/// Solves `(K + jitter·I) X = rhs` by forward and back substitution.
pub fn solve_psd(factor: &PsdFactor, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if rhs.nrows() != factor.dim() {
        return Err(Error::invalid(format!(
            "right-hand side has {} rows, factor is {}x{}",
            rhs.nrows(),
            factor.dim(),
            factor.dim()
        )));
    }
    let y = factor
        .lower
        .solve_lower_triangular(rhs)
        .ok_or_else(|| Error::numerical("singular triangular factor"))?;
    factor
        .lower
        .tr_solve_lower_triangular(&y)
        .ok_or_else(|| Error::numerical("singular triangular factor"))
}

/// `log |K + jitter·I| = 2 Σ log L_ii`.
pub fn logdet(factor: &PsdFactor) -> f64 {
    2.0 * factor.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Inverse of a symmetric PSD matrix through [`psd_factor`].
pub fn inverse_psd(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    psd_factor(matrix)?.inverse()
}

/// Sherman-Morrison-Woodbury update: `(A + U V)⁻¹` from `A⁻¹`.
///
/// Evaluates `A⁻¹ - A⁻¹U (I + V A⁻¹ U)⁻¹ V A⁻¹`; only the `m x m` inner
/// system is solved.
pub fn smw_inverse(
    a_inverse: &DMatrix<f64>,
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a_inverse.nrows();
    let m = u.ncols();
    if !a_inverse.is_square() || u.nrows() != n || v.nrows() != m || v.ncols() != n {
        return Err(Error::invalid(format!(
            "smw_inverse: incompatible shapes A⁻¹ {}x{}, U {}x{}, V {}x{}",
            a_inverse.nrows(),
            a_inverse.ncols(),
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let a_inv_u = a_inverse * u;
    let v_a_inv = v * a_inverse;
    let inner = DMatrix::<f64>::identity(m, m) + v * &a_inv_u;
    check_condition(&inner)?;
    let correction = inner
        .lu()
        .solve(&v_a_inv)
        .ok_or_else(|| Error::numerical("smw_inverse: inner system is singular"))?;
    Ok(a_inverse - a_inv_u * correction)
}

fn check_condition(inner: &DMatrix<f64>) -> Result<()> {
    if inner.is_empty() {
        return Ok(());
    }
    let sv = inner.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > 0.0) || !(max / min < MAX_CONDITION) {
        return Err(Error::numerical(format!(
            "inner {}x{} system is numerically singular (condition number {:.3e})",
            inner.nrows(),
            inner.ncols(),
            max / min
        )));
    }
    Ok(())
}

/// Replaces `M` by `(M + Mᵀ) / 2`.
pub fn symmetrize(matrix: &mut DMatrix<f64>) {
    let n = matrix.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg;
        }
    }
}

/// Largest absolute entrywise difference; `inf` on shape mismatch.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
