//! Simulates a constant-velocity target observed in position with
//! Matérn 3/2 measurement noise and writes the three CSV files.
//!
//! cargo run --example simulate -- /tmp/cv

use std::fs::File;

use gpkf::io::{write_states, write_timeseries};
use gpkf::sim::simulate;
use gpkf::{KernelFamily, KernelSpec, StateSpaceModel};
use nalgebra::{DMatrix, DVector};

fn main() -> gpkf::Result<()> {
    let prefix = std::env::args().nth(1).unwrap_or_else(|| "cv".into());
    let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let w = DMatrix::from_row_slice(2, 2, &[0.25, 0.5, 0.5, 1.0]) * 1e-3;
    let model = StateSpaceModel::new(f, h, w, DVector::zeros(2), DMatrix::identity(2, 2))?;
    let kernel = KernelSpec::new(KernelFamily::Matern32, 0.5, 10.0)?;

    let sim = simulate(&model, &kernel, 200, 7)?;
    write_states(&mut File::create(format!("{prefix}_states.csv"))?, 0, &sim.states)?;
    write_timeseries(&mut File::create(format!("{prefix}_measurements.csv"))?, &sim.measurements, "z")?;
    write_timeseries(&mut File::create(format!("{prefix}_noise.csv"))?, &sim.noise, "v")?;

    let last = sim.states.last().unwrap();
    println!("wrote {prefix}_{{states,measurements,noise}}.csv");
    println!("final position {:.3}, velocity {:.4}", last[0], last[1]);
    Ok(())
}
