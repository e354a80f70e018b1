//! Kalman filtering under time-correlated measurement noise.
//!
//! The measurement noise `v_t` of the linear model
//!
//! ```text
//! x_t = F_{t-1} x_{t-1} + w_t,  w_t ~ N(0, W_t)
//! z_t = H_t x_t + v_t,          v_t ~ GP(0, k(t, t'))
//! ```
//!
//! is a zero-mean Gaussian process over integer time stamps instead of white
//! noise. The crate provides
//!
//! * [`kernels`]: stationary covariance functions and Gram matrices,
//! * [`gp`]: marginal likelihood, ML-II hyperparameter fitting, GP sampling
//!   and sample autocorrelation diagnostics,
//! * [`filter`]: the classical Kalman filter, the GP-noise filter with full or
//!   windowed history, window-size heuristics and a dense batch oracle,
//! * [`sim`]: seeded simulation of trajectories with GP measurement noise,
//! * [`io`]: CSV time series, TOML run configurations and estimate output,
//! * [`cli`]: the `gpkf` command-line front end.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod error;
pub mod filter;
pub mod gp;
pub mod io;
pub mod kernels;
pub mod numerics;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
pub use filter::{
    Estimate, FilterState, Moments, StateSpaceModel, WindowCapacity, WindowPolicy,
};
pub use kernels::{KernelFamily, KernelSpec};
pub use series::{ResidualSeries, TimeSeries};
