use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::check_symmetric;

type MatrixFn = dyn Fn(i64) -> DMatrix<f64> + Send + Sync;

/// A matrix-valued function of the integer time index.
#[derive(Clone)]
pub enum MatrixProvider {
    Constant(DMatrix<f64>),
    /// Must be pure: the same `t` always yields the same matrix.
    TimeVarying(Arc<MatrixFn>),
}

impl MatrixProvider {
    pub fn time_varying(f: impl Fn(i64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        MatrixProvider::TimeVarying(Arc::new(f))
    }

    pub fn at(&self, t: i64) -> Cow<'_, DMatrix<f64>> {
        match self {
            MatrixProvider::Constant(m) => Cow::Borrowed(m),
            MatrixProvider::TimeVarying(f) => Cow::Owned(f(t)),
        }
    }

    pub fn as_constant(&self) -> Option<&DMatrix<f64>> {
        match self {
            MatrixProvider::Constant(m) => Some(m),
            MatrixProvider::TimeVarying(_) => None,
        }
    }
}

impl fmt::Debug for MatrixProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixProvider::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MatrixProvider::TimeVarying(_) => f.write_str("TimeVarying(..)"),
        }
    }
}

/// Constant providers compare by value, time-varying ones by identity.
impl PartialEq for MatrixProvider {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (MatrixProvider::Constant(a), MatrixProvider::Constant(b)) => a == b,
            (MatrixProvider::TimeVarying(a), MatrixProvider::TimeVarying(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl From<DMatrix<f64>> for MatrixProvider {
    fn from(m: DMatrix<f64>) -> Self {
        MatrixProvider::Constant(m)
    }
}

/// Linear-Gaussian dynamics with time-correlated measurement noise:
///
/// ```text
/// x_t = F(t-1) x_{t-1} + w_t,   w_t ~ N(0, W(t))
/// z_t = H(t) x_t + v_t
/// ```
///
/// with `x_0 ~ N(x0, P0)` at the time just before the first measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    state_dim: usize,
    meas_dim: usize,
    transition: MatrixProvider,
    observation: MatrixProvider,
    process_noise: MatrixProvider,
    initial_mean: DVector<f64>,
    initial_covariance: DMatrix<f64>,
}

impl StateSpaceModel {
    /// Builds a model and checks every constant matrix for shape and symmetry.
    pub fn new(
        transition: impl Into<MatrixProvider>,
        observation: impl Into<MatrixProvider>,
        process_noise: impl Into<MatrixProvider>,
        initial_mean: DVector<f64>,
        initial_covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let state_dim = initial_mean.len();
        let observation = observation.into();
        let meas_dim = match &observation {
            MatrixProvider::Constant(h) => h.nrows(),
            MatrixProvider::TimeVarying(f) => f(0).nrows(),
        };
        let model = StateSpaceModel {
            state_dim,
            meas_dim,
            transition: transition.into(),
            observation,
            process_noise: process_noise.into(),
            initial_mean,
            initial_covariance,
        };
        if state_dim == 0 || meas_dim == 0 {
            return Err(Error::invalid("state and measurement dimensions must be positive"));
        }
        check_shape("initial covariance", &model.initial_covariance, state_dim, state_dim)?;
        check_symmetric(&model.initial_covariance)?;
        for (name, provider, rows, cols) in [
            ("transition", &model.transition, state_dim, state_dim),
            ("observation", &model.observation, meas_dim, state_dim),
            ("process noise", &model.process_noise, state_dim, state_dim),
        ] {
            if let MatrixProvider::Constant(m) = provider {
                check_shape(name, m, rows, cols)?;
            }
        }
        if let MatrixProvider::Constant(w) = &model.process_noise {
            check_symmetric(w)?;
        }
        Ok(model)
    }

    /// Scalar model with `F`, `H`, `W`, `x0`, `P0` all `1 x 1`.
    pub fn scalar(f: f64, h: f64, w: f64, x0: f64, p0: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, f),
            DMatrix::from_element(1, 1, h),
            DMatrix::from_element(1, 1, w),
            DVector::from_element(1, x0),
            DMatrix::from_element(1, 1, p0),
        )
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn meas_dim(&self) -> usize {
        self.meas_dim
    }

    pub fn initial_mean(&self) -> &DVector<f64> {
        &self.initial_mean
    }

    pub fn initial_covariance(&self) -> &DMatrix<f64> {
        &self.initial_covariance
    }

    pub fn transition_provider(&self) -> &MatrixProvider {
        &self.transition
    }

    pub fn observation_provider(&self) -> &MatrixProvider {
        &self.observation
    }

    pub fn process_noise_provider(&self) -> &MatrixProvider {
        &self.process_noise
    }

    /// `F(t)`, mapping `x_t` to the mean of `x_{t+1}`.
    pub fn transition(&self, t: i64) -> Result<Cow<'_, DMatrix<f64>>> {
        let f = self.transition.at(t);
        check_shape("transition", &f, self.state_dim, self.state_dim)?;
        Ok(f)
    }

    /// `H(t)`.
    pub fn observation(&self, t: i64) -> Result<Cow<'_, DMatrix<f64>>> {
        let h = self.observation.at(t);
        check_shape("observation", &h, self.meas_dim, self.state_dim)?;
        Ok(h)
    }

    /// `W(t)`, the covariance of the noise entering `x_t`.
    pub fn process_noise(&self, t: i64) -> Result<Cow<'_, DMatrix<f64>>> {
        let w = self.process_noise.at(t);
        check_shape("process noise", &w, self.state_dim, self.state_dim)?;
        Ok(w)
    }
}

fn check_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::invalid(format!(
            "{name} matrix is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} matrix has non-finite entries")));
    }
    Ok(())
}
