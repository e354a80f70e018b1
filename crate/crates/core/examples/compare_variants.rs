//! Paired-seed comparison of the Kalman filter, windowed GP-noise filters and
//! the batch oracle on the static scalar scenario.
//!
//! cargo run --release --example compare_variants

use gpkf::cli::{compare, Variant};
use gpkf::filter::{Moments, WindowPolicy};
use gpkf::io::RunConfig;
use gpkf::sim::{static_scalar_scenario, SCENARIO_HORIZON};

fn main() -> gpkf::Result<()> {
    let (model, kernel) = static_scalar_scenario();
    let config = RunConfig {
        model,
        kernel,
        window: WindowPolicy::Fixed(5),
        horizon: SCENARIO_HORIZON,
        seed: 0,
        moments: Moments::Exact,
    };
    let variants: Vec<Variant> = ["kf", "gp-2", "gp-5", "gp-full", "printed-5", "oracle"]
        .iter()
        .map(|s| s.parse())
        .collect::<gpkf::Result<_>>()?;
    let report = compare(&config, &variants, 50)?;
    println!("{:<10} {:>8} {:>12}", "variant", "mse", "steady var");
    for v in variants {
        let a = report.aggregate(v);
        println!("{:<10} {:>8.4} {:>12.4}", v.to_string(), a.mse, a.mean_variance);
    }
    Ok(())
}
