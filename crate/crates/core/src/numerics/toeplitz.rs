//! Durbin-Levinson recursion for symmetric Toeplitz covariance matrices.
//!
//! For a stationary process sampled at consecutive integer times the Gram
//! matrix is Toeplitz. The recursion yields, for every order `t`, the linear
//! predictor of `x_t` from `x_{t-1}, ..., x_0` and its innovation variance.
//! Those are exactly the rows of the inverse unit-lower Cholesky factor and
//! the squared Cholesky pivots, so whitening and coloring cost `O(n²)` time
//! and `O(n)` memory instead of the `O(n³)` / `O(n²)` of a dense factor.

use super::with_jitter_ladder;
use crate::error::{Error, Result};

/// Incremental Durbin-Levinson state.
#[derive(Debug, Clone)]
pub struct DurbinLevinson<'a> {
    acov: &'a [f64],
    jitter: f64,
    /// `phi[j - 1]` multiplies `x_{t-j}`.
    phi: Vec<f64>,
    scratch: Vec<f64>,
    variance: f64,
    order: usize,
}

impl<'a> DurbinLevinson<'a> {
    /// Starts at order 0 (no predictors) for autocovariance `acov` with
    /// `jitter` added to the lag-0 term. Returns `None` if `acov[0] + jitter`
    /// is not positive.
    pub fn new(acov: &'a [f64], jitter: f64) -> Option<Self> {
        let v0 = acov.first()? + jitter;
        if !(v0.is_finite() && v0 > 0.0) {
            return None;
        }
        Some(DurbinLevinson {
            acov,
            jitter,
            phi: Vec::with_capacity(acov.len()),
            scratch: Vec::with_capacity(acov.len()),
            variance: v0,
            order: 0,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Predictor coefficients of the current order.
    pub fn coefficients(&self) -> &[f64] {
        &self.phi
    }

    /// Innovation variance of the current order (the squared Cholesky pivot).
    pub fn innovation_variance(&self) -> f64 {
        self.variance
    }

    /// Advances to the next order. Returns `false` when the innovation
    /// variance stops being positive (matrix not numerically PD).
    pub fn advance(&mut self) -> bool {
        let k = self.order + 1;
        if k >= self.acov.len() {
            return false;
        }
        let gamma = |h: usize| self.acov[h] + if h == 0 { self.jitter } else { 0.0 };
        let mut num = gamma(k);
        for (j, p) in self.phi.iter().enumerate() {
            num -= p * gamma(k - 1 - j);
        }
        let kappa = num / self.variance;
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.phi);
        for j in 0..self.phi.len() {
            self.phi[j] = self.scratch[j] - kappa * self.scratch[k - 2 - j];
        }
        self.phi.push(kappa);
        let variance = self.variance * (1.0 - kappa * kappa);
        self.order = k;
        if !(variance.is_finite() && variance > 0.0) {
            return false;
        }
        self.variance = variance;
        true
    }

    /// One-step prediction `Σ_j phi_j x_{t-j}` where `history[t]` is the
    /// value at time `t` and the current order equals `history.len()`.
    fn predict(&self, history: &[f64]) -> f64 {
        let t = history.len();
        self.phi
            .iter()
            .enumerate()
            .map(|(j, p)| p * history[t - 1 - j])
            .sum()
    }
}

/// Quadratic forms and log-determinant from whitening series with a Toeplitz
/// covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitened {
    /// `xᵀ (K + jitter·I)⁻¹ x` per input series.
    pub quadratic_forms: Vec<f64>,
    /// `log |K + jitter·I|`.
    pub logdet: f64,
    pub jitter_used: f64,
}

fn check_lengths(acov: &[f64], series: &[Vec<f64>]) -> Result<()> {
    if acov.is_empty() {
        return Err(Error::invalid("empty autocovariance"));
    }
    if let Some(s) = series.iter().find(|s| s.len() != acov.len()) {
        return Err(Error::invalid(format!(
            "series of length {} does not match autocovariance of length {}",
            s.len(),
            acov.len()
        )));
    }
    Ok(())
}

/// Whitens each series against the Toeplitz matrix with first row `acov`.
///
/// Applies the same jitter ladder as [`super::psd_factor`], scaled by
/// `acov[0]`.
pub fn toeplitz_whiten(acov: &[f64], series: &[Vec<f64>]) -> Result<Whitened> {
    check_lengths(acov, series)?;
    let n = acov.len();
    let attempt = |jitter: f64| -> Option<Whitened> {
        let mut dl = DurbinLevinson::new(acov, jitter)?;
        let mut quad = vec![0.0; series.len()];
        let mut logdet = 0.0;
        for t in 0..n {
            if t > 0 && !dl.advance() {
                return None;
            }
            let var = dl.innovation_variance();
            logdet += var.ln();
            for (q, s) in quad.iter_mut().zip(series) {
                let e = s[t] - dl.predict(&s[..t]);
                *q += e * e / var;
            }
        }
        Some(Whitened {
            quadratic_forms: quad,
            logdet,
            jitter_used: jitter,
        })
    };
    with_jitter_ladder(acov[0], attempt)
        .map(|(w, _)| w)
        .ok_or_else(|| {
            Error::numerical(format!(
                "{n}x{n} Toeplitz covariance is not positive definite at any jitter level"
            ))
        })
}

/// Colors standard-normal series: returns `L ε` for each `ε` in `white`,
/// where `L` is the Cholesky factor of the Toeplitz matrix (plus jitter).
pub fn toeplitz_color(acov: &[f64], white: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    check_lengths(acov, white)?;
    let n = acov.len();
    let attempt = |jitter: f64| -> Option<Vec<Vec<f64>>> {
        let mut dl = DurbinLevinson::new(acov, jitter)?;
        let mut out: Vec<Vec<f64>> = white.iter().map(|_| Vec::with_capacity(n)).collect();
        for t in 0..n {
            if t > 0 && !dl.advance() {
                return None;
            }
            let sd = dl.innovation_variance().sqrt();
            for (o, eps) in out.iter_mut().zip(white) {
                let value = dl.predict(o) + sd * eps[t];
                o.push(value);
            }
        }
        Some(out)
    };
    with_jitter_ladder(acov[0], attempt).ok_or_else(|| {
        Error::numerical(format!(
            "{n}x{n} Toeplitz covariance is not positive definite at any jitter level"
        ))
    })
}
