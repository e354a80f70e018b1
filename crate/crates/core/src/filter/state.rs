use std::collections::VecDeque;

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView};

use super::model::StateSpaceModel;
use crate::error::{Error, Result};
use crate::numerics::symmetrize;

/// Maximum number of measurements a windowed filter conditions on,
/// counting the current one. `Bounded(1)` is the classical Kalman filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowCapacity {
    Bounded(usize),
    Unbounded,
}

impl WindowCapacity {
    pub fn bounded(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("window capacity must be at least 1"));
        }
        Ok(WindowCapacity::Bounded(n))
    }

    /// Number of past noise values carried between steps.
    pub fn history(self) -> Option<usize> {
        match self {
            WindowCapacity::Bounded(n) => Some(n.saturating_sub(1)),
            WindowCapacity::Unbounded => None,
        }
    }

    pub fn admits(self, len: usize) -> bool {
        match self {
            WindowCapacity::Bounded(n) => len <= n,
            WindowCapacity::Unbounded => true,
        }
    }
}

/// One processed measurement as seen at its arrival time.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEntry {
    pub time: i64,
    pub measurement: DVector<f64>,
    /// `H_i x̂_i⁻`
    pub predicted_measurement: DVector<f64>,
    /// `H_i P_i⁻ H_iᵀ`
    pub predicted_measurement_covariance: DMatrix<f64>,
    /// `H_i P_i⁻`
    pub observation_covariance: DMatrix<f64>,
}

/// Posterior at time `t`.
///
/// Besides the state it carries the joint Gaussian over the state and the
/// most recent measurement-noise values `v_t, v_{t-1}, ...`, newest first,
/// stored as one vector `[x_t; v_t; v_{t-1}; ...]` with its covariance.
/// Filters that treat the noise as white keep no noise lags.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub(crate) time: i64,
    pub(crate) state_dim: usize,
    pub(crate) meas_dim: usize,
    pub(crate) joint_mean: DVector<f64>,
    pub(crate) joint_covariance: DMatrix<f64>,
    pub(crate) window: VecDeque<WindowEntry>,
    pub(crate) capacity: WindowCapacity,
}

impl FilterState {
    /// Prior `N(x0, P0)` at `start_time - 1`, so the first measurement is at
    /// `start_time`.
    pub fn initial(model: &StateSpaceModel, capacity: WindowCapacity, start_time: i64) -> Self {
        FilterState {
            time: start_time - 1,
            state_dim: model.state_dim(),
            meas_dim: model.meas_dim(),
            joint_mean: model.initial_mean().clone(),
            joint_covariance: model.initial_covariance().clone(),
            window: VecDeque::new(),
            capacity,
        }
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn mean(&self) -> DVectorView<'_, f64> {
        self.joint_mean.rows(0, self.state_dim)
    }

    pub fn covariance(&self) -> DMatrixView<'_, f64> {
        self.joint_covariance
            .view((0, 0), (self.state_dim, self.state_dim))
    }

    pub fn window(&self) -> &VecDeque<WindowEntry> {
        &self.window
    }

    pub fn capacity(&self) -> WindowCapacity {
        self.capacity
    }

    /// Number of past noise values in the joint posterior.
    pub fn noise_lags(&self) -> usize {
        (self.joint_mean.len() - self.state_dim) / self.meas_dim
    }

    /// Mean of the retained noise values, newest first.
    pub fn noise_mean(&self) -> DVectorView<'_, f64> {
        let d = self.joint_mean.len();
        self.joint_mean.rows(self.state_dim, d - self.state_dim)
    }

    pub fn joint_covariance(&self) -> &DMatrix<f64> {
        &self.joint_covariance
    }

    /// Changes the capacity, dropping the oldest window entries and noise
    /// lags that no longer fit. Dropping lags marginalizes them exactly.
    pub fn set_capacity(&mut self, capacity: WindowCapacity) {
        self.capacity = capacity;
        while !capacity.admits(self.window.len()) {
            self.window.pop_front();
        }
        if let Some(h) = capacity.history() {
            self.truncate_noise(h);
        }
    }

    pub(crate) fn truncate_noise(&mut self, lags: usize) {
        if self.noise_lags() <= lags {
            return;
        }
        let d = self.state_dim + lags * self.meas_dim;
        self.joint_mean = self.joint_mean.rows(0, d).clone_owned();
        self.joint_covariance = self.joint_covariance.view((0, 0), (d, d)).clone_owned();
    }

    /// Checks the window invariants: consecutive times ending at the state
    /// time, length within capacity, and no more noise lags than entries.
    pub fn validate(&self) -> Result<()> {
        if !self.capacity.admits(self.window.len()) {
            return Err(Error::WindowCorrupt(format!(
                "window holds {} entries, capacity is {:?}",
                self.window.len(),
                self.capacity
            )));
        }
        for (a, b) in self.window.iter().zip(self.window.iter().skip(1)) {
            if b.time != a.time + 1 {
                return Err(Error::WindowCorrupt(format!(
                    "window times {} and {} are not consecutive",
                    a.time, b.time
                )));
            }
        }
        if let Some(last) = self.window.back() {
            if last.time != self.time {
                return Err(Error::WindowCorrupt(format!(
                    "window ends at t={} but the state is at t={}",
                    last.time, self.time
                )));
            }
        }
        let lags = self.noise_lags();
        if lags > self.window.len() || self.capacity.history().is_some_and(|h| lags > h) {
            return Err(Error::WindowCorrupt(format!(
                "{lags} noise lags retained with {} window entries",
                self.window.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn push_entry(&mut self, entry: WindowEntry) {
        self.window.push_back(entry);
        while !self.capacity.admits(self.window.len()) {
            self.window.pop_front();
        }
    }
}

/// Output of one filter step at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub time: i64,
    /// `x̂_t`
    pub mean: DVector<f64>,
    /// `P_t`
    pub covariance: DMatrix<f64>,
    /// `x̂_t⁻`
    pub predicted_mean: DVector<f64>,
    /// `P_t⁻`
    pub predicted_covariance: DMatrix<f64>,
    /// `z_t - ẑ_t`
    pub innovation: DVector<f64>,
    /// `L_t`
    pub innovation_covariance: DMatrix<f64>,
    /// `K_t`
    pub gain: DMatrix<f64>,
    /// Number of measurements the step conditioned on, including `z_t`.
    pub window_len: usize,
}

/// Time update: `x̂_t⁻ = F(t-1) x̂_{t-1}`, `P_t⁻ = F(t-1) P_{t-1} F(t-1)ᵀ + W(t)`.
pub fn predict(model: &StateSpaceModel, state: &FilterState) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let t = state.time + 1;
    let f = model.transition(t - 1)?;
    let w = model.process_noise(t)?;
    let mean = &*f * state.mean();
    let mut cov = &*f * state.covariance() * f.transpose() + &*w;
    symmetrize(&mut cov);
    Ok((mean, cov))
}

pub(crate) fn check_measurement(model: &StateSpaceModel, z: &DVector<f64>) -> Result<()> {
    if z.len() != model.meas_dim() {
        return Err(Error::invalid(format!(
            "measurement has {} components, model expects {}",
            z.len(),
            model.meas_dim()
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("measurement has non-finite components"));
    }
    Ok(())
}

pub(crate) fn check_state(model: &StateSpaceModel, state: &FilterState) -> Result<()> {
    if state.state_dim != model.state_dim() || state.meas_dim != model.meas_dim() {
        return Err(Error::invalid(format!(
            "state has dimensions ({}, {}), model has ({}, {})",
            state.state_dim,
            state.meas_dim,
            model.state_dim(),
            model.meas_dim()
        )));
    }
    state.validate()
}

/// Classical Kalman step with white measurement noise of covariance `V`.
///
/// Any retained noise lags are discarded.
pub fn kf_step(
    model: &StateSpaceModel,
    state: &FilterState,
    z: &DVector<f64>,
    v: &DMatrix<f64>,
) -> Result<(FilterState, Estimate)> {
    let mut next = state.clone();
    let estimate = kf_advance(model, &mut next, z, v)?;
    Ok((next, estimate))
}

pub(crate) fn kf_advance(
    model: &StateSpaceModel,
    state: &mut FilterState,
    z: &DVector<f64>,
    v: &DMatrix<f64>,
) -> Result<Estimate> {
    check_state(model, state)?;
    check_measurement(model, z)?;
    let m = model.meas_dim();
    if v.shape() != (m, m) {
        return Err(Error::invalid(format!(
            "measurement covariance is {}x{}, expected {m}x{m}",
            v.nrows(),
            v.ncols()
        )));
    }
    let t = state.time + 1;
    let (x_pred, p_pred) = predict(model, state)?;
    let h = model.observation(t)?;
    let hp = &*h * &p_pred;
    let hph = &hp * h.transpose();
    let z_pred = &*h * &x_pred;
    let mut l = &hph + v;
    symmetrize(&mut l);
    let j = hp.transpose();
    let gain = solve_gain(&l, &j)?;
    let innovation = z - &z_pred;
    let mean = &x_pred + &gain * &innovation;
    let mut cov = &p_pred - &gain * j.transpose();
    symmetrize(&mut cov);

    state.time = t;
    state.joint_mean = mean.clone();
    state.joint_covariance = cov.clone();
    state.push_entry(WindowEntry {
        time: t,
        measurement: z.clone(),
        predicted_measurement: z_pred,
        predicted_measurement_covariance: hph,
        observation_covariance: hp,
    });
    Ok(Estimate {
        time: t,
        mean,
        covariance: cov,
        predicted_mean: x_pred,
        predicted_covariance: p_pred,
        innovation,
        innovation_covariance: l,
        gain,
        window_len: 1,
    })
}

/// `K = J L⁻¹` for symmetric positive definite `L`.
pub(crate) fn solve_gain(l: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let factor = crate::numerics::psd_factor(l)
        .map_err(|e| Error::numerical(format!("innovation covariance: {e}")))?;
    Ok(factor.solve(&j.transpose())?.transpose())
}
