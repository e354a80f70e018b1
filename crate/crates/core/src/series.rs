use nalgebra::DVector;

use crate::error::{Error, Result};

/// Uniformly indexed sequence of equally sized vectors at consecutive
/// integer time stamps `start_time, start_time + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start_time: i64,
    dim: usize,
    values: Vec<DVector<f64>>,
}

/// Measurement-error residuals `v_t`; same layout as a measurement series.
pub type ResidualSeries = TimeSeries;

impl TimeSeries {
    pub fn new(start_time: i64, values: Vec<DVector<f64>>) -> Result<Self> {
        let dim = values.first().map(|v| v.len()).unwrap_or(0);
        if values.is_empty() || dim == 0 {
            return Err(Error::invalid("a time series needs at least one non-empty vector"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| v.len() != dim) {
            return Err(Error::invalid(format!(
                "vector at index {i} has dimension {}, expected {dim}",
                v.len()
            )));
        }
        Ok(TimeSeries {
            start_time,
            dim,
            values,
        })
    }

    /// Builds a series from per-axis sequences of equal length.
    pub fn from_axes(start_time: i64, axes: &[Vec<f64>]) -> Result<Self> {
        let len = axes.first().map(|a| a.len()).unwrap_or(0);
        if axes.iter().any(|a| a.len() != len) {
            return Err(Error::invalid("axes have different lengths"));
        }
        let values = (0..len)
            .map(|t| DVector::from_iterator(axes.len(), axes.iter().map(|a| a[t])))
            .collect();
        Self::new(start_time, values)
    }

    /// Single-axis series.
    pub fn scalar(start_time: i64, values: &[f64]) -> Result<Self> {
        Self::from_axes(start_time, &[values.to_vec()])
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Vector dimension `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.values.len() as i64).map(move |i| self.start_time + i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &DVector<f64>)> + '_ {
        self.times().zip(self.values.iter())
    }

    /// Values of one coordinate over time.
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[axis]).collect()
    }

    pub fn axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|a| self.axis(a)).collect()
    }

    /// Subtracts the per-axis sample mean.
    pub fn demeaned(&self) -> TimeSeries {
        let n = self.values.len() as f64;
        let mean = self
            .values
            .iter()
            .fold(DVector::zeros(self.dim), |acc, v| acc + v)
            / n;
        TimeSeries {
            start_time: self.start_time,
            dim: self.dim,
            values: self.values.iter().map(|v| v - &mean).collect(),
        }
    }
}
