use nalgebra::{DMatrix, DVector};

use super::exact::{gpkf_advance, WindowedGpFilter};
use super::model::StateSpaceModel;
use super::printed::{printed_step, PrintedWindowFilter};
use super::state::{kf_advance, Estimate, FilterState, WindowCapacity};
use super::window::{window_by_correlation, window_by_covariance, CovarianceWindow, Freeze};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::series::TimeSeries;

/// How many past measurements the GP-noise filter conditions on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    /// `N` measurements including the current one.
    Fixed(usize),
    /// `N` from [`window_by_correlation`].
    CorrelationThreshold(f64),
    /// Unbounded until `trace(P_t) < τ`, then fixed.
    CovarianceThreshold(f64),
    Unbounded,
}

/// Which second-order moments the GP-noise filter uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Moments {
    /// Joint posterior of state and recent noise values.
    #[default]
    Exact,
    /// Block-diagonal residual covariance, see [`printed_step`].
    Printed,
}

#[derive(Debug, Clone)]
enum Engine {
    Slow,
    ExactWindow(WindowedGpFilter),
    PrintedWindow(PrintedWindowFilter),
}

/// Streaming GP-noise filter driven by a [`WindowPolicy`].
#[derive(Debug, Clone)]
pub struct GpFilter {
    model: StateSpaceModel,
    kernel: KernelSpec,
    moments: Moments,
    state: FilterState,
    engine: Engine,
    covariance_policy: Option<CovarianceWindow>,
}

impl GpFilter {
    /// First measurement expected at `start_time`.
    pub fn new(
        model: StateSpaceModel,
        kernel: KernelSpec,
        policy: WindowPolicy,
        moments: Moments,
        start_time: i64,
    ) -> Result<Self> {
        let (capacity, covariance_policy) = match policy {
            WindowPolicy::Fixed(n) => (WindowCapacity::bounded(n)?, None),
            WindowPolicy::CorrelationThreshold(k_min) => (
                WindowCapacity::Bounded(window_by_correlation(&kernel, k_min)?),
                None,
            ),
            WindowPolicy::CovarianceThreshold(tau) => {
                (WindowCapacity::Unbounded, Some(window_by_covariance(tau)?))
            }
            WindowPolicy::Unbounded => (WindowCapacity::Unbounded, None),
        };
        let state = FilterState::initial(&model, capacity, start_time);
        let mut filter = GpFilter {
            model,
            kernel,
            moments,
            state,
            engine: Engine::Slow,
            covariance_policy,
        };
        filter.engine = filter.engine_for(capacity)?;
        Ok(filter)
    }

    fn engine_for(&self, capacity: WindowCapacity) -> Result<Engine> {
        Ok(match (capacity, self.moments) {
            (WindowCapacity::Unbounded, _) => Engine::Slow,
            (WindowCapacity::Bounded(n), Moments::Exact) => {
                Engine::ExactWindow(WindowedGpFilter::new(self.kernel.clone(), n)?)
            }
            (WindowCapacity::Bounded(n), Moments::Printed) => {
                Engine::PrintedWindow(PrintedWindowFilter::new(self.kernel.clone(), n)?)
            }
        })
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Current window capacity.
    pub fn capacity(&self) -> WindowCapacity {
        self.state.capacity()
    }

    /// Set once a covariance-threshold policy has frozen the window.
    pub fn freeze(&self) -> Option<Freeze> {
        self.covariance_policy.as_ref().and_then(|p| p.frozen())
    }

    /// Processes the measurement at `state().time() + 1`. On error the
    /// filter is left at the previous step.
    pub fn step(&mut self, z: &DVector<f64>) -> Result<Estimate> {
        let estimate = match &mut self.engine {
            Engine::ExactWindow(f) => f.advance(&self.model, &mut self.state, z)?,
            Engine::PrintedWindow(f) => f.advance(&self.model, &mut self.state, z)?,
            Engine::Slow => match self.moments {
                Moments::Exact => {
                    gpkf_advance(&self.model, &self.kernel, &mut self.state, z)?
                }
                Moments::Printed => {
                    let (next, est) = printed_step(&self.model, &self.kernel, &self.state, z)?;
                    self.state = next;
                    est
                }
            },
        };
        if let Some(policy) = &mut self.covariance_policy {
            let trace = estimate.covariance.trace();
            if let Some(freeze) = policy.observe(estimate.time, trace, estimate.window_len) {
                let capacity = WindowCapacity::Bounded(freeze.capacity);
                self.state.set_capacity(capacity);
                self.engine = self.engine_for(capacity)?;
            }
        }
        Ok(estimate)
    }
}

/// Result of filtering a whole series; estimates up to the first failure.
#[derive(Debug)]
pub struct FilterRun {
    pub estimates: Vec<Estimate>,
    /// Window capacity in effect at the end of the run.
    pub capacity: WindowCapacity,
    pub freeze: Option<Freeze>,
    pub error: Option<Error>,
}

impl FilterRun {
    pub fn into_result(self) -> Result<Vec<Estimate>> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.estimates),
        }
    }
}

/// Runs the GP-noise filter over a series.
pub fn run_filter(
    model: &StateSpaceModel,
    kernel: &KernelSpec,
    policy: WindowPolicy,
    moments: Moments,
    measurements: &TimeSeries,
) -> FilterRun {
    let mut filter = match GpFilter::new(
        model.clone(),
        kernel.clone(),
        policy,
        moments,
        measurements.start_time(),
    ) {
        Ok(f) => f,
        Err(e) => {
            return FilterRun {
                estimates: Vec::new(),
                capacity: WindowCapacity::Unbounded,
                freeze: None,
                error: Some(e),
            }
        }
    };
    let mut estimates = Vec::with_capacity(measurements.len());
    let mut error = None;
    for z in measurements.values() {
        match filter.step(z) {
            Ok(e) => estimates.push(e),
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    FilterRun {
        estimates,
        capacity: filter.capacity(),
        freeze: filter.freeze(),
        error,
    }
}

/// Classical Kalman filter with white measurement noise `V` over a series.
pub fn run_kalman(model: &StateSpaceModel, v: &DMatrix<f64>, measurements: &TimeSeries) -> FilterRun {
    let mut state = FilterState::initial(model, WindowCapacity::Bounded(1), measurements.start_time());
    let mut estimates = Vec::with_capacity(measurements.len());
    let mut error = None;
    for z in measurements.values() {
        match kf_advance(model, &mut state, z, v) {
            Ok(e) => estimates.push(e),
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    FilterRun {
        estimates,
        capacity: WindowCapacity::Bounded(1),
        freeze: None,
        error,
    }
}
