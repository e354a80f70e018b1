#![allow(dead_code)]

use gpkf::filter::{FilterState, StateSpaceModel, WindowCapacity};
use gpkf::{KernelFamily, KernelSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Stable random model with `n <= 4`, `m <= 3` and a random non-white kernel.
pub fn random_model(seed: u64) -> (StateSpaceModel, KernelSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=3);
    let q = normal_matrix(&mut rng, n, n).qr().q();
    let f = q * 0.95;
    let h = normal_matrix(&mut rng, m, n);
    let b = normal_matrix(&mut rng, n, n);
    let w = &b * b.transpose() * 0.1 + DMatrix::identity(n, n) * 0.01;
    let c = normal_matrix(&mut rng, n, n);
    let p0 = &c * c.transpose() + DMatrix::identity(n, n) * 0.1;
    let x0 = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
    let families = [
        KernelFamily::Rbf,
        KernelFamily::Exponential,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
    ];
    let family = families[rng.random_range(0..families.len())];
    let variance = rng.random_range(0.5..2.0);
    let lengthscale = rng.random_range(1.0..10.0);
    let model = StateSpaceModel::new(f, h, symmetric(w), x0, symmetric(p0)).unwrap();
    (model, KernelSpec::new(family, variance, lengthscale).unwrap())
}

pub fn symmetric(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn initial(model: &StateSpaceModel, capacity: WindowCapacity) -> FilterState {
    FilterState::initial(model, capacity, 1)
}

/// Largest absolute entry over paired vectors and matrices.
pub fn max_gap<'a>(
    a: impl IntoIterator<Item = (&'a DVector<f64>, &'a DMatrix<f64>)>,
    b: impl IntoIterator<Item = (&'a DVector<f64>, &'a DMatrix<f64>)>,
) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|((ma, pa), (mb, pb))| (ma - mb).amax().max((pa - pb).amax()))
        .fold(0.0, f64::max)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Paired t statistic of `a - b`.
pub fn paired_t(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean(&d) / (sample_sd(&d) / (d.len() as f64).sqrt())
}

pub mod props;
