//! GP-noise filter that tracks the joint posterior of the state and the most
//! recent noise values.
//!
//! With `h` retained lags the prior of the new noise value is the GP
//! regression `v_t = Σ_j a_j v_{t-j} + e_t`, `e_t ~ N(0, q I)`, where
//! `a = A⁻¹ c`, `A` is the Gram matrix over the `h` previous times and `c`
//! holds `k(t, t-j)`. The stacked vector `[x_t; v_t; v_{t-1}; ...]` is then
//! updated with `z_t = H x_t + v_t` by an ordinary Kalman update, so the
//! cross-covariances between the state and past noise values that the
//! measurement history induces are kept rather than discarded.

use nalgebra::{DMatrix, DVector};

use super::model::StateSpaceModel;
use super::state::{
    check_measurement, check_state, solve_gain, Estimate, FilterState, WindowCapacity,
    WindowEntry,
};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::kernels::KernelFamily;
use crate::numerics::{psd_factor, symmetrize};

/// Relative nugget added to the noise variance of correlated kernels.
///
/// Smooth kernels (RBF, long-lengthscale Matérn) make the noise almost
/// perfectly predictable from its past. The exact lag regression then has
/// huge alternating coefficients that amplify rounding in the joint
/// covariance until the innovation covariance loses definiteness. The
/// filters and [`batch_oracle`](super::batch_oracle) therefore all condition
/// on `k(r) + NOISE_NUGGET·k(0)·[r = 0]`. White kernels get no nugget.
pub const NOISE_NUGGET: f64 = 1e-6;

/// Absolute nugget [`NOISE_NUGGET`]`·k(0)` for correlated kernels, 0 for White.
pub fn noise_nugget(kernel: &KernelSpec) -> f64 {
    if kernel.family() == KernelFamily::White {
        0.0
    } else {
        NOISE_NUGGET * kernel.variance()
    }
}

/// Best linear predictor of the next noise value from the previous `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRegression {
    coefficients: Vec<f64>,
    innovation_variance: f64,
}

impl NoiseRegression {
    /// Inverts the `h x h` lag Gram matrix (nugget included) directly.
    pub fn new(kernel: &KernelSpec, lags: usize) -> Result<Self> {
        let k0 = kernel.variance() + noise_nugget(kernel);
        if lags == 0 {
            return Ok(NoiseRegression {
                coefficients: Vec::new(),
                innovation_variance: k0,
            });
        }
        let gram = DMatrix::from_fn(lags, lags, |i, j| {
            if i == j {
                k0
            } else {
                kernel.at_lag(i.abs_diff(j) as u64)
            }
        });
        let a_inverse = psd_factor(&gram)?.inverse()?;
        let c = DVector::from_fn(lags, |j, _| kernel.at_lag(j as u64 + 1));
        let a = a_inverse * &c;
        Ok(NoiseRegression {
            coefficients: a.iter().copied().collect(),
            innovation_variance: (k0 - c.dot(&a)).max(0.0),
        })
    }

    /// `a_j`, multiplying `v_{t-j}` for `j = 1..=h`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn innovation_variance(&self) -> f64 {
        self.innovation_variance
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

/// One GP-noise step that inverts the lag Gram matrix afresh.
///
/// The step conditions on as many past measurements as the state's window
/// capacity allows. With a White kernel or an empty history it coincides with
/// [`kf_step`](super::kf_step) with `V = k(0) I`.
pub fn gpkf_step(
    model: &StateSpaceModel,
    kernel: &KernelSpec,
    state: &FilterState,
    z: &DVector<f64>,
) -> Result<(FilterState, Estimate)> {
    let mut next = state.clone();
    let estimate = gpkf_advance(model, kernel, &mut next, z)?;
    Ok((next, estimate))
}

/// In-place variant of [`gpkf_step`]; the state is left untouched on error.
pub fn gpkf_advance(
    model: &StateSpaceModel,
    kernel: &KernelSpec,
    state: &mut FilterState,
    z: &DVector<f64>,
) -> Result<Estimate> {
    check_state(model, state)?;
    let regression = NoiseRegression::new(kernel, state.noise_lags())?;
    exact_advance(model, state, z, &regression)
}

/// Windowed GP-noise filter with the lag regression for a full window
/// computed once.
///
/// For a stationary kernel the Gram matrix over any `N - 1` consecutive
/// times is the same, so once the window is full each step costs
/// `O((n + N m)² m)` instead of an `O(N³)` inversion. During warm-up it falls
/// back to [`gpkf_step`].
#[derive(Debug, Clone)]
pub struct WindowedGpFilter {
    kernel: KernelSpec,
    capacity: usize,
    regression: NoiseRegression,
}

impl WindowedGpFilter {
    pub fn new(kernel: KernelSpec, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("window capacity must be at least 1"));
        }
        let regression = NoiseRegression::new(&kernel, capacity - 1)?;
        Ok(WindowedGpFilter {
            kernel,
            capacity,
            regression,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn regression(&self) -> &NoiseRegression {
        &self.regression
    }

    /// Same contract as [`gpkf_step`] for a state whose capacity is `N`.
    pub fn step(
        &self,
        model: &StateSpaceModel,
        state: &FilterState,
        z: &DVector<f64>,
    ) -> Result<(FilterState, Estimate)> {
        let mut next = state.clone();
        let estimate = self.advance(model, &mut next, z)?;
        Ok((next, estimate))
    }

    /// In-place variant of [`step`](Self::step); the state is left untouched
    /// on error.
    pub fn advance(
        &self,
        model: &StateSpaceModel,
        state: &mut FilterState,
        z: &DVector<f64>,
    ) -> Result<Estimate> {
        check_state(model, state)?;
        if state.capacity() != WindowCapacity::Bounded(self.capacity) {
            return Err(Error::invalid(format!(
                "state capacity {:?} does not match the filter's window of {}",
                state.capacity(),
                self.capacity
            )));
        }
        if state.noise_lags() == self.regression.order() {
            exact_advance(model, state, z, &self.regression)
        } else {
            gpkf_advance(model, &self.kernel, state, z)
        }
    }
}

pub(crate) fn exact_advance(
    model: &StateSpaceModel,
    state: &mut FilterState,
    z: &DVector<f64>,
    regression: &NoiseRegression,
) -> Result<Estimate> {
    check_measurement(model, z)?;
    let n = model.state_dim();
    let m = model.meas_dim();
    let h = state.noise_lags();
    debug_assert_eq!(regression.order(), h);
    let t = state.time() + 1;
    let f = model.transition(t - 1)?;
    let w = model.process_noise(t)?;
    let obs = model.observation(t)?;

    let hm = h * m;
    let d = n + m + hm;
    let old = &state.joint_covariance;
    let old_mean = &state.joint_mean;

    // Predicted joint over [x_t; v_t; v_{t-1}; ...; v_{t-h}].
    let mut mean = DVector::zeros(d);
    let mut cov = DMatrix::zeros(d, d);
    let x_pred = &*f * old_mean.rows(0, n);
    let mut p_pred = &*f * old.view((0, 0), (n, n)) * f.transpose() + &*w;
    symmetrize(&mut p_pred);
    mean.rows_mut(0, n).copy_from(&x_pred);
    cov.view_mut((0, 0), (n, n)).copy_from(&p_pred);
    if h > 0 {
        let cross = &*f * old.view((0, n), (n, hm));
        cov.view_mut((0, n + m), (n, hm)).copy_from(&cross);
        cov.view_mut((n + m, 0), (hm, n)).copy_from(&cross.transpose());
        cov.view_mut((n + m, n + m), (hm, hm))
            .copy_from(&old.view((n, n), (hm, hm)));
        mean.rows_mut(n + m, hm).copy_from(&old_mean.rows(n, hm));

        // v_t = Σ_j a_j v_{t-j} + e_t
        let mut weights = DMatrix::zeros(hm, m);
        for (j, a) in regression.coefficients().iter().enumerate() {
            for i in 0..m {
                weights[(j * m + i, i)] = *a;
            }
        }
        let noise_mean = weights.transpose() * old_mean.rows(n, hm);
        mean.rows_mut(n, m).copy_from(&noise_mean);
        let with_past = cov.view((0, n + m), (d, hm)) * &weights;
        let mut var = with_past.view((n + m, 0), (hm, m)).transpose() * &weights;
        for i in 0..m {
            var[(i, i)] += regression.innovation_variance();
        }
        symmetrize(&mut var);
        for i in 0..d {
            if (n..n + m).contains(&i) {
                continue;
            }
            for k in 0..m {
                cov[(i, n + k)] = with_past[(i, k)];
                cov[(n + k, i)] = with_past[(i, k)];
            }
        }
        cov.view_mut((n, n), (m, m)).copy_from(&var);
    } else {
        for i in 0..m {
            cov[(n + i, n + i)] = regression.innovation_variance();
        }
    }

    // z_t = H x_t + v_t
    let gz = cov.columns(0, n) * obs.transpose() + cov.columns(n, m);
    let z_pred_state = &*obs * &x_pred;
    let z_pred = &z_pred_state + mean.rows(n, m);
    let mut l = &*obs * gz.rows(0, n) + gz.rows(n, m);
    symmetrize(&mut l);
    let gain = solve_gain(&l, &gz)?;
    let innovation = z - &z_pred;
    mean += &gain * &innovation;
    cov -= &gain * gz.transpose();
    symmetrize(&mut cov);

    let hp = &*obs * &p_pred;
    let hph = &hp * obs.transpose();
    let estimate = Estimate {
        time: t,
        mean: mean.rows(0, n).clone_owned(),
        covariance: cov.view((0, 0), (n, n)).clone_owned(),
        predicted_mean: x_pred.clone(),
        predicted_covariance: p_pred,
        innovation,
        innovation_covariance: l,
        gain: gain.rows(0, n).clone_owned(),
        window_len: h + 1,
    };

    state.time = t;
    state.joint_mean = mean;
    state.joint_covariance = cov;
    let keep = match state.capacity().history() {
        Some(max) => (h + 1).min(max),
        None => h + 1,
    };
    state.truncate_noise(keep);
    state.push_entry(WindowEntry {
        time: t,
        measurement: z.clone(),
        predicted_measurement: z_pred_state,
        predicted_measurement_covariance: hph,
        observation_covariance: hp,
    });
    Ok(estimate)
}
