use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Moments, StateSpaceModel, WindowPolicy};
use crate::kernels::KernelSpec;

/// Everything needed to simulate and filter one experiment.
///
/// ```toml
/// horizon = 100
/// seed = 7
///
/// [model]
/// state_dim = 1
/// meas_dim = 1
/// transition = [1.0]
/// observation = [1.0]
/// process_noise = [0.0]
/// initial_mean = [0.0]
/// initial_covariance = [1.0]
///
/// [kernel]
/// family = "matern32"
/// variance = 1.0
/// lengthscale = 5.0
///
/// [window]
/// fixed = 5
/// ```
///
/// Matrices are row-major. `[window]` takes exactly one of `fixed`,
/// `k_min`, `tau` or `unbounded = true`. The optional top-level `estimator`
/// is `"exact"` (default) or `"printed"`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: StateSpaceModel,
    pub kernel: KernelSpec,
    pub window: WindowPolicy,
    pub horizon: usize,
    pub seed: u64,
    pub moments: Moments,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    horizon: usize,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    estimator: Option<Estimator>,
    model: RawModel,
    kernel: KernelSpec,
    window: RawWindow,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Estimator {
    Exact,
    Printed,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    state_dim: usize,
    meas_dim: usize,
    transition: Vec<f64>,
    observation: Vec<f64>,
    process_noise: Vec<f64>,
    initial_mean: Vec<f64>,
    initial_covariance: Vec<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unbounded: Option<bool>,
}

fn schema(key: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Deserializes TOML, reporting the failing key path.
pub(crate) fn from_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| schema("", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let message = e.into_inner().message().to_string();
        schema(if key == "." { "" } else { &key }, message)
    })
}

fn matrix(key: &str, data: &[f64], rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(schema(
            key,
            format!("expected {} entries ({rows}x{cols}, row-major), got {}", rows * cols, data.len()),
        ));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(schema(key, "entries must be finite"));
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

impl RawModel {
    fn build(&self) -> Result<StateSpaceModel> {
        let (n, m) = (self.state_dim, self.meas_dim);
        if n == 0 {
            return Err(schema("model.state_dim", "must be at least 1"));
        }
        if m == 0 {
            return Err(schema("model.meas_dim", "must be at least 1"));
        }
        let f = matrix("model.transition", &self.transition, n, n)?;
        let h = matrix("model.observation", &self.observation, m, n)?;
        let w = matrix("model.process_noise", &self.process_noise, n, n)?;
        let x0 = matrix("model.initial_mean", &self.initial_mean, n, 1)?;
        let p0 = matrix("model.initial_covariance", &self.initial_covariance, n, n)?;
        for (key, s) in [("model.process_noise", &w), ("model.initial_covariance", &p0)] {
            if (s - s.transpose()).amax() > 1e-10 * s.amax().max(1.0) {
                return Err(schema(key, "matrix must be symmetric"));
            }
            if s.clone().symmetric_eigen().eigenvalues.min() < -1e-9 * s.amax().max(1.0) {
                return Err(schema(key, "matrix must be positive semidefinite"));
            }
        }
        StateSpaceModel::new(f, h, w, DVector::from_column_slice(x0.as_slice()), p0)
            .map_err(|e| schema("model", e.to_string()))
    }

    fn from_model(model: &StateSpaceModel) -> Result<Self> {
        let constant = |p: &crate::filter::MatrixProvider, key: &str| {
            p.as_constant().map(flatten).ok_or_else(|| {
                Error::invalid(format!("{key} is time-varying and cannot be written to a config"))
            })
        };
        Ok(RawModel {
            state_dim: model.state_dim(),
            meas_dim: model.meas_dim(),
            transition: constant(model.transition_provider(), "transition")?,
            observation: constant(model.observation_provider(), "observation")?,
            process_noise: constant(model.process_noise_provider(), "process noise")?,
            initial_mean: model.initial_mean().iter().copied().collect(),
            initial_covariance: flatten(model.initial_covariance()),
        })
    }
}

impl RawWindow {
    fn policy(&self) -> Result<WindowPolicy> {
        let mut set = Vec::new();
        if let Some(n) = self.fixed {
            if n == 0 {
                return Err(schema("window.fixed", "must be at least 1"));
            }
            set.push(WindowPolicy::Fixed(n));
        }
        if let Some(k) = self.k_min {
            set.push(WindowPolicy::CorrelationThreshold(k));
        }
        if let Some(tau) = self.tau {
            set.push(WindowPolicy::CovarianceThreshold(tau));
        }
        match self.unbounded {
            Some(true) => set.push(WindowPolicy::Unbounded),
            Some(false) => return Err(schema("window.unbounded", "only `true` is meaningful")),
            None => {}
        }
        match set.as_slice() {
            [one] => Ok(*one),
            [] => Err(schema(
                "window",
                "one of `fixed`, `k_min`, `tau`, `unbounded` is required",
            )),
            _ => Err(schema(
                "window",
                "`fixed`, `k_min`, `tau` and `unbounded` are mutually exclusive",
            )),
        }
    }

    fn from_policy(policy: WindowPolicy) -> Self {
        let mut w = RawWindow::default();
        match policy {
            WindowPolicy::Fixed(n) => w.fixed = Some(n),
            WindowPolicy::CorrelationThreshold(k) => w.k_min = Some(k),
            WindowPolicy::CovarianceThreshold(t) => w.tau = Some(t),
            WindowPolicy::Unbounded => w.unbounded = Some(true),
        }
        w
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = from_toml(text)?;
        Ok(RunConfig {
            model: raw.model.build()?,
            kernel: raw.kernel,
            window: raw.window.policy()?,
            horizon: raw.horizon,
            seed: raw.seed,
            moments: match raw.estimator {
                None | Some(Estimator::Exact) => Moments::Exact,
                Some(Estimator::Printed) => Moments::Printed,
            },
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let raw = RawConfig {
            horizon: self.horizon,
            seed: self.seed,
            estimator: match self.moments {
                Moments::Exact => None,
                Moments::Printed => Some(Estimator::Printed),
            },
            model: RawModel::from_model(&self.model)?,
            kernel: self.kernel,
            window: RawWindow::from_policy(self.window),
        };
        toml::to_string(&raw).map_err(|e| Error::invalid(e.to_string()))
    }
}

pub fn read_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    RunConfig::from_toml_str(&fs::read_to_string(path)?)
}

pub fn write_config(path: impl AsRef<Path>, config: &RunConfig) -> Result<()> {
    fs::write(path, config.to_toml_string()?)?;
    Ok(())
}

/// Fit diagnostics stored next to a fitted kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub demeaned: bool,
}

/// A `[kernel]` table with an optional `[fit]` table, as written by the
/// `fit` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
}

impl KernelFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        from_toml(text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(e.to_string()))
    }
}

pub fn read_kernel_file(path: impl AsRef<Path>) -> Result<KernelFile> {
    KernelFile::from_toml_str(&fs::read_to_string(path)?)
}
