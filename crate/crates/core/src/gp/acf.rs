use crate::error::{Error, Result};

/// Sample autocorrelation with its white-noise confidence band.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfResult {
    /// `0..=max_lag`.
    pub lags: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// `1.96 / sqrt(n)`.
    pub confidence_band: f64,
}

impl AcfResult {
    /// Fraction of lags in `1..=max_lag` whose coefficient lies inside the band.
    pub fn fraction_inside_band(&self) -> f64 {
        let tail = &self.coefficients[1..];
        let inside = tail
            .iter()
            .filter(|c| c.abs() <= self.confidence_band)
            .count();
        inside as f64 / tail.len() as f64
    }
}

/// Biased sample autocorrelation (normalized by the lag-0 sum of squares).
pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    let n = series.len();
    if max_lag < 1 || n <= max_lag {
        return Err(Error::invalid(format!(
            "acf needs series length > max_lag >= 1, got length {n} and max_lag {max_lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = centered.iter().map(|x| x * x).sum();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateSeries);
    }
    let mut coefficients = Vec::with_capacity(max_lag + 1);
    coefficients.push(1.0);
    for h in 1..=max_lag {
        let num: f64 = centered[..n - h]
            .iter()
            .zip(&centered[h..])
            .map(|(a, b)| a * b)
            .sum();
        coefficients.push(num / denom);
    }
    Ok(AcfResult {
        lags: (0..=max_lag).collect(),
        coefficients,
        confidence_band: 1.96 / (n as f64).sqrt(),
    })
}
