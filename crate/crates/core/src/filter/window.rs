use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};

/// Longest lag scanned before giving up on a threshold.
const MAX_SCAN: u64 = 100_000_000;

/// Smallest `N ≥ 1` with `k(0, l) < k_min` for every `l ≥ N`.
///
/// All kernels here decrease monotonically in the lag, so the scan stops at
/// the first lag below the threshold. A White kernel has no lagged
/// correlation and always yields `N = 1`.
pub fn window_by_correlation(kernel: &KernelSpec, k_min: f64) -> Result<usize> {
    if !(k_min > 0.0) || !k_min.is_finite() {
        return Err(Error::InvalidThreshold(format!(
            "k_min must be positive and finite, got {k_min}"
        )));
    }
    if k_min >= kernel.variance() {
        return Err(Error::InvalidThreshold(format!(
            "k_min = {k_min} is not below the kernel variance {}",
            kernel.variance()
        )));
    }
    if kernel.family() == KernelFamily::White {
        return Ok(1);
    }
    (1..=MAX_SCAN)
        .find(|&lag| kernel.at_lag(lag) < k_min)
        .map(|lag| lag as usize)
        .ok_or_else(|| {
            Error::InvalidThreshold(format!(
                "kernel stays above k_min = {k_min} for {MAX_SCAN} lags"
            ))
        })
}

/// Where a covariance-threshold window froze.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Freeze {
    /// Time of the step whose posterior first fell below the threshold.
    pub time: i64,
    /// Window length fixed from then on.
    pub capacity: usize,
}

/// Runs with an unbounded window until `trace(P_t) < τ`, then fixes the
/// window at its current length.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceWindow {
    threshold: f64,
    frozen: Option<Freeze>,
}

/// Policy for [`CovarianceWindow`]. `τ = 0` never freezes.
pub fn window_by_covariance(threshold: f64) -> Result<CovarianceWindow> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidThreshold(format!(
            "covariance threshold must be non-negative, got {threshold}"
        )));
    }
    Ok(CovarianceWindow {
        threshold,
        frozen: None,
    })
}

impl CovarianceWindow {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn frozen(&self) -> Option<Freeze> {
        self.frozen
    }

    /// Feeds the posterior trace after the step at `time`, which conditioned
    /// on `window_len` measurements. Returns the freeze when it happens.
    pub fn observe(&mut self, time: i64, trace: f64, window_len: usize) -> Option<Freeze> {
        if self.frozen.is_some() || !(trace < self.threshold) {
            return None;
        }
        let freeze = Freeze {
            time,
            capacity: window_len.max(1),
        };
        self.frozen = Some(freeze);
        Some(freeze)
    }
}
