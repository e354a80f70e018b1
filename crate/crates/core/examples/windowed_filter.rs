//! Filters one simulated run with the classical Kalman filter and with the
//! GP-noise filter at several window sizes, streaming through `GpFilter`.
//!
//! cargo run --release --example windowed_filter

use gpkf::filter::{run_kalman, GpFilter, Moments, WindowPolicy};
use gpkf::sim::{simulate, static_scalar_scenario, SCENARIO_HORIZON};
use nalgebra::DMatrix;

fn main() -> gpkf::Result<()> {
    let (model, kernel) = static_scalar_scenario();
    let sim = simulate(&model, &kernel, SCENARIO_HORIZON, 5)?;
    let truth = sim.measured_states();
    let mse = |means: &mut dyn Iterator<Item = f64>| {
        means.zip(truth).map(|(m, x)| (m - x[0]).powi(2)).sum::<f64>() / truth.len() as f64
    };

    let v = DMatrix::identity(1, 1) * kernel.variance();
    let kf = run_kalman(&model, &v, &sim.measurements).into_result()?;
    println!("kf        mse {:.4}  final P {:.4}", mse(&mut kf.iter().map(|e| e.mean[0])), kf.last().unwrap().covariance[(0, 0)]);

    for policy in [WindowPolicy::Fixed(2), WindowPolicy::Fixed(5), WindowPolicy::Unbounded] {
        let mut filter = GpFilter::new(model.clone(), kernel, policy, Moments::Exact, 1)?;
        let mut means = Vec::new();
        let mut last = None;
        for z in sim.measurements.values() {
            let e = filter.step(z)?;
            means.push(e.mean[0]);
            last = Some(e);
        }
        let last = last.unwrap();
        println!(
            "{:<9} mse {:.4}  final P {:.4}  window {}",
            format!("{policy:?}"),
            mse(&mut means.into_iter()),
            last.covariance[(0, 0)],
            last.window_len
        );
    }
    Ok(())
}
