//! Checks the unbounded GP-noise filter against dense batch conditioning on
//! a two-dimensional model with vector measurements.
//!
//! cargo run --example oracle_check

use gpkf::filter::{batch_oracle, run_filter, Moments, WindowPolicy};
use gpkf::sim::simulate;
use gpkf::{KernelFamily, KernelSpec, StateSpaceModel};
use nalgebra::{DMatrix, DVector};

fn main() -> gpkf::Result<()> {
    let f = DMatrix::from_row_slice(2, 2, &[0.95, 0.1, 0.0, 0.9]);
    let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let model = StateSpaceModel::new(f, h, DMatrix::identity(2, 2) * 0.05, DVector::zeros(2), DMatrix::identity(2, 2))?;
    let kernel = KernelSpec::new(KernelFamily::Matern52, 0.8, 6.0)?;
    let sim = simulate(&model, &kernel, 60, 1)?;

    let filtered = run_filter(&model, &kernel, WindowPolicy::Unbounded, Moments::Exact, &sim.measurements).into_result()?;
    let oracle = batch_oracle(&model, &kernel, &sim.measurements)?;
    for (e, (m, p)) in filtered.iter().zip(&oracle).step_by(10) {
        println!(
            "t = {:>2}  mean gap {:.2e}  covariance gap {:.2e}",
            e.time,
            (&e.mean - m).amax(),
            (&e.covariance - p).amax()
        );
    }
    Ok(())
}
