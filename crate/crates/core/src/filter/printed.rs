//! GP-noise filter that conditions on stored measurement residuals through a
//! block-diagonal approximation of their joint covariance.
//!
//! The residuals `z_i - H_i x̂_i⁻` of the window are treated as having
//! covariance `S = blockdiag(H_i P_i⁻ H_iᵀ) + Gram ⊗ I_m`, which ignores the
//! correlation between state errors at different times. The correction
//! `J_t = P_t⁻ H_tᵀ` likewise ignores the state/noise cross-covariance. Kept
//! as a reference estimator; [`gpkf_step`](super::gpkf_step) is exact.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::model::StateSpaceModel;
use super::state::{
    check_measurement, check_state, predict, solve_gain, Estimate, FilterState, WindowCapacity,
    WindowEntry,
};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numerics::{psd_factor, symmetrize, SlidingBlockInverse};

/// `S = blockdiag(H_i P_i⁻ H_iᵀ) + Gram(times) ⊗ I_m` over the given entries.
pub fn assemble_var_z<'a>(
    window: impl IntoIterator<Item = &'a WindowEntry>,
    kernel: &KernelSpec,
) -> DMatrix<f64> {
    let entries: Vec<&WindowEntry> = window.into_iter().collect();
    let Some(first) = entries.first() else {
        return DMatrix::zeros(0, 0);
    };
    let m = first.measurement.len();
    let k = entries.len();
    let mut s = DMatrix::zeros(k * m, k * m);
    for (i, a) in entries.iter().enumerate() {
        s.view_mut((i * m, i * m), (m, m))
            .copy_from(&a.predicted_measurement_covariance);
        for (j, b) in entries.iter().enumerate() {
            let kij = kernel.eval(a.time, b.time);
            for r in 0..m {
                s[(i * m + r, j * m + r)] += kij;
            }
        }
    }
    symmetrize(&mut s);
    s
}

fn history(state: &FilterState) -> Vec<&WindowEntry> {
    let len = state.window().len();
    let keep = match state.capacity().history() {
        Some(h) => h.min(len),
        None => len,
    };
    state.window().iter().skip(len - keep).collect()
}

/// How `S⁻¹` is applied to the history.
enum HistorySolve<'a> {
    Factor,
    Inverse(&'a DMatrix<f64>),
}

/// One step with `S` factored directly.
pub fn printed_step(
    model: &StateSpaceModel,
    kernel: &KernelSpec,
    state: &FilterState,
    z: &DVector<f64>,
) -> Result<(FilterState, Estimate)> {
    let mut next = state.clone();
    let estimate = printed_advance(model, kernel, &mut next, z, HistorySolve::Factor)?;
    Ok((next, estimate))
}

fn printed_advance(
    model: &StateSpaceModel,
    kernel: &KernelSpec,
    state: &mut FilterState,
    z: &DVector<f64>,
    solve: HistorySolve<'_>,
) -> Result<Estimate> {
    check_state(model, state)?;
    check_measurement(model, z)?;
    let m = model.meas_dim();
    let t = state.time() + 1;
    let (x_pred, p_pred) = predict(model, state)?;
    let obs = model.observation(t)?;
    let hp = &*obs * &p_pred;
    let hph = &hp * obs.transpose();
    let z_pred_state = &*obs * &x_pred;

    let past = history(state);
    let k = past.len();
    let mut l = hph.clone();
    for i in 0..m {
        l[(i, i)] += kernel.variance();
    }
    let mut z_pred = z_pred_state.clone();
    if k > 0 {
        let mut c = DMatrix::zeros(m, k * m);
        let mut dev = DVector::zeros(k * m);
        for (j, e) in past.iter().enumerate() {
            let kj = kernel.eval(t, e.time);
            for r in 0..m {
                c[(r, j * m + r)] = kj;
            }
            dev.rows_mut(j * m, m)
                .copy_from(&(&e.measurement - &e.predicted_measurement));
        }
        // S⁻¹ Cᵀ
        let s_inv_ct = match solve {
            HistorySolve::Factor => {
                let s = assemble_var_z(past.iter().copied(), kernel);
                psd_factor(&s)?.solve(&c.transpose())?
            }
            HistorySolve::Inverse(inv) => {
                if inv.nrows() != k * m {
                    return Err(Error::WindowCorrupt(
                        "cached inverse does not match the window".into(),
                    ));
                }
                inv * c.transpose()
            }
        };
        z_pred += s_inv_ct.transpose() * dev;
        l -= &c * &s_inv_ct;
    }
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
        predicted_measurement: z_pred_state,
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
        window_len: k + 1,
    })
}

/// Windowed variant of [`printed_step`] that keeps `S⁻¹` up to date as the
/// window slides: each new measurement is a rank-`m` Woodbury update and the
/// dropped one a Schur complement, so no `Nm x Nm` factorization is needed
/// once the window is full.
#[derive(Debug, Clone)]
pub struct PrintedWindowFilter {
    kernel: KernelSpec,
    capacity: usize,
    inverse: Option<SlidingBlockInverse>,
    times: VecDeque<i64>,
}

impl PrintedWindowFilter {
    pub fn new(kernel: KernelSpec, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("window capacity must be at least 1"));
        }
        Ok(PrintedWindowFilter {
            kernel,
            capacity,
            inverse: None,
            times: VecDeque::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn step(
        &mut self,
        model: &StateSpaceModel,
        state: &FilterState,
        z: &DVector<f64>,
    ) -> Result<(FilterState, Estimate)> {
        let mut next = state.clone();
        let estimate = self.advance(model, &mut next, z)?;
        Ok((next, estimate))
    }

    pub fn advance(
        &mut self,
        model: &StateSpaceModel,
        state: &mut FilterState,
        z: &DVector<f64>,
    ) -> Result<Estimate> {
        if state.capacity() != WindowCapacity::Bounded(self.capacity) {
            return Err(Error::invalid(format!(
                "state capacity {:?} does not match the filter's window of {}",
                state.capacity(),
                self.capacity
            )));
        }
        let lags = self.capacity - 1;
        let past = history(state);
        if lags == 0 || past.len() < lags {
            self.inverse = None;
            return printed_advance(model, &self.kernel, state, z, HistorySolve::Factor);
        }
        let times: Vec<i64> = past.iter().map(|e| e.time).collect();
        if self.inverse.is_none() || !self.times.iter().eq(times.iter()) {
            let s = assemble_var_z(past.iter().copied(), &self.kernel);
            self.inverse = Some(SlidingBlockInverse::from_matrix(model.meas_dim(), &s)?);
            self.times = times.into();
        }
        let cached = self.inverse.as_ref().expect("cache was just filled");
        let estimate = printed_advance(
            model,
            &self.kernel,
            state,
            z,
            HistorySolve::Inverse(cached.inverse()),
        )?;
        if self.slide(state).is_err() {
            // The step itself succeeded; rebuild the cache from scratch next time.
            self.inverse = None;
        }
        Ok(estimate)
    }

    fn slide(&mut self, state: &FilterState) -> Result<()> {
        let newest = state.window().back().expect("step pushed an entry");
        let m = newest.measurement.len();
        let inverse = self.inverse.as_mut().expect("cache present");
        let mut cross = DMatrix::zeros(self.times.len() * m, m);
        for (j, &tj) in self.times.iter().enumerate() {
            let kj = self.kernel.eval(newest.time, tj);
            for r in 0..m {
                cross[(j * m + r, r)] = kj;
            }
        }
        let mut diag = newest.predicted_measurement_covariance.clone();
        for r in 0..m {
            diag[(r, r)] += self.kernel.variance();
        }
        inverse.push_back(&cross, &diag)?;
        inverse.pop_front()?;
        self.times.push_back(newest.time);
        self.times.pop_front();
        Ok(())
    }
}
