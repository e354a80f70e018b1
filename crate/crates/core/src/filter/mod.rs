//! State estimators: the classical Kalman filter, the GP-noise filter with
//! full or windowed history, window-size heuristics and a dense batch
//! oracle.
//!
//! Time convention: the prior `N(x0, P0)` describes `x` one step before the
//! first measurement, and the step to time `t` uses `F(t-1)`, `W(t)` and
//! `H(t)`. A window of capacity `N` conditions on `z_t` and the `N - 1`
//! measurements before it, so `N = 1` is the Kalman filter with
//! `V = k(0) I`.

mod exact;
mod model;
mod oracle;
mod printed;
mod run;
mod state;
mod window;

pub use exact::{
    gpkf_advance, gpkf_step, noise_nugget, NoiseRegression, WindowedGpFilter, NOISE_NUGGET,
};
pub use model::{MatrixProvider, StateSpaceModel};
pub use oracle::{batch_oracle, ORACLE_MAX_LEN};
pub use printed::{assemble_var_z, printed_step, PrintedWindowFilter};
pub use run::{run_filter, run_kalman, FilterRun, GpFilter, Moments, WindowPolicy};
pub use state::{kf_step, predict, Estimate, FilterState, WindowCapacity, WindowEntry};
pub use window::{window_by_correlation, window_by_covariance, CovarianceWindow, Freeze};
