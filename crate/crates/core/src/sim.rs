//! Seeded trajectories with GP measurement noise.
//!
//! Three independent random streams are derived from the master seed, one
//! each for the initial state, the process noise and the measurement noise,
//! so changing the kernel leaves the state trajectory unchanged.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::filter::StateSpaceModel;
use crate::gp::sample_gp;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::series::{ResidualSeries, TimeSeries};

/// Stream offset multiplier (odd, from the golden ratio).
const STREAM_STEP: u64 = 0x9E37_79B9_7F4A_7C15;
pub const INITIAL_STREAM: u64 = 1;
pub const PROCESS_STREAM: u64 = 2;
pub const MEASUREMENT_STREAM: u64 = 3;

/// Horizon of [`static_scalar_scenario`].
pub const SCENARIO_HORIZON: usize = 100;

/// Seed of random stream `stream` for master seed `seed`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_add(stream.wrapping_mul(STREAM_STEP))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// `x_0..x_T` at times `0..=T`.
    pub states: Vec<DVector<f64>>,
    /// `z_1..z_T` at times `1..=T`.
    pub measurements: TimeSeries,
    /// `v_1..v_T`, so that `z_t = H(t) x_t + v_t`.
    pub noise: ResidualSeries,
    pub seed: u64,
}

impl SimulationResult {
    /// States at the measurement times, `x_1..x_T`.
    pub fn measured_states(&self) -> &[DVector<f64>] {
        &self.states[1..]
    }
}

/// Draws `x_0 ~ N(x0, P0)`, propagates `x_t = F(t-1) x_{t-1} + w_t` with
/// `w_t ~ N(0, W(t))` and adds a GP noise sample to `H(t) x_t`.
pub fn simulate(
    model: &StateSpaceModel,
    kernel: &KernelSpec,
    horizon: usize,
    seed: u64,
) -> Result<SimulationResult> {
    if horizon == 0 {
        return Err(Error::invalid("simulation horizon must be at least 1"));
    }
    let mut initial_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, INITIAL_STREAM));
    let mut process_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, PROCESS_STREAM));

    let mut states = Vec::with_capacity(horizon + 1);
    let x0 = model.initial_mean() + gaussian(model.initial_covariance(), &mut initial_rng)?;
    states.push(x0);
    for t in 1..=horizon as i64 {
        let f = model.transition(t - 1)?;
        let w = gaussian(&model.process_noise(t)?.into_owned(), &mut process_rng)?;
        let next = &*f * states.last().expect("non-empty") + w;
        states.push(next);
    }

    let raw = sample_gp(
        kernel,
        horizon,
        model.meas_dim(),
        sub_seed(seed, MEASUREMENT_STREAM),
    )?;
    let noise = TimeSeries::new(1, raw.values().to_vec())?;
    let mut z = Vec::with_capacity(horizon);
    for (i, v) in noise.values().iter().enumerate() {
        let t = i as i64 + 1;
        z.push(&*model.observation(t)? * &states[i + 1] + v);
    }
    Ok(SimulationResult {
        states,
        measurements: TimeSeries::new(1, z)?,
        noise,
        seed,
    })
}

/// `N(0, Σ)` sample through the symmetric square root; tiny negative
/// eigenvalues from rounding are treated as zero.
fn gaussian(cov: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    let n = cov.nrows();
    let eps = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    if cov.iter().all(|&c| c == 0.0) {
        return Ok(DVector::zeros(n));
    }
    let eig = cov.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * scale.max(1.0)) {
        return Err(Error::invalid("covariance is not positive semidefinite"));
    }
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * eps.component_mul(&root))
}

/// Scalar static-state scenario: `F = H = 1`, `W = 0`, `x0 = 0`, `P0 = 1`,
/// Matern 3/2 noise with `σ² = 1` and lengthscale 5. Run it for
/// [`SCENARIO_HORIZON`] steps.
pub fn static_scalar_scenario() -> (StateSpaceModel, KernelSpec) {
    let model = StateSpaceModel::scalar(1.0, 1.0, 0.0, 0.0, 1.0).expect("valid scalar model");
    let kernel = KernelSpec::new(KernelFamily::Matern32, 1.0, 5.0).expect("valid kernel");
    (model, kernel)
}
