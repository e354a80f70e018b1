//! Picks a window size from the kernel (correlation threshold) and from the
//! filter's own uncertainty (covariance threshold).
//!
//! cargo run --example window_heuristics

use gpkf::filter::{run_filter, window_by_correlation, Moments, WindowPolicy};
use gpkf::sim::{simulate, static_scalar_scenario};
use gpkf::{KernelFamily, KernelSpec};

fn main() -> gpkf::Result<()> {
    let k_min = (-3.0f64).exp();
    for family in [KernelFamily::Exponential, KernelFamily::Matern32, KernelFamily::Rbf] {
        let kernel = KernelSpec::new(family, 1.0, 5.0)?;
        println!("{kernel}: N = {} for k_min = e^-3", window_by_correlation(&kernel, k_min)?);
    }

    let (model, kernel) = static_scalar_scenario();
    let sim = simulate(&model, &kernel, 100, 9)?;
    for tau in [0.5, 0.2, 0.1] {
        let run = run_filter(&model, &kernel, WindowPolicy::CovarianceThreshold(tau), Moments::Exact, &sim.measurements);
        match run.freeze {
            Some(f) => println!("tau = {tau}: froze at t = {} with N = {}", f.time, f.capacity),
            None => println!("tau = {tau}: never froze, window stayed unbounded"),
        }
    }
    Ok(())
}
