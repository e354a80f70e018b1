//! Compares the sample autocorrelation of white and correlated noise against
//! the ±1.96/√n band that i.i.d. data should stay inside.
//!
//! cargo run --example acf_diagnostics

use gpkf::gp::{acf, sample_gp};
use gpkf::{KernelFamily, KernelSpec};

fn main() -> gpkf::Result<()> {
    let n = 2000;
    let kernels = [
        KernelSpec::white(1.0)?,
        KernelSpec::new(KernelFamily::Exponential, 1.0, 20.0)?,
        KernelSpec::new(KernelFamily::Rbf, 1.0, 5.0)?,
    ];
    for kernel in kernels {
        let v = sample_gp(&kernel, n, 1, 3)?.axis(0);
        let r = acf(&v, 40)?;
        println!(
            "{kernel}: band ±{:.3}, {:.0}% of lags 1..40 inside, lag 1 = {:.3}, lag 10 = {:.3}",
            r.confidence_band,
            100.0 * r.fraction_inside_band(),
            r.coefficients[1],
            r.coefficients[10]
        );
    }
    Ok(())
}
