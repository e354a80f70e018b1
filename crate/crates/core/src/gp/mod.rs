//! Gaussian-process noise models: likelihood, ML-II fitting, sampling and
//! autocorrelation diagnostics.
//!
//! Multi-axis residuals are treated as independent realizations of one
//! shared kernel, so likelihoods add across axes.

mod acf;
mod optimize;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::numerics::{psd_factor, toeplitz_color, toeplitz_whiten};
use crate::series::ResidualSeries;

pub use acf::{acf, AcfResult};
pub use optimize::{NelderMead, NelderMeadResult};

/// Fewest samples per axis accepted by [`fit_ml2`].
pub const MIN_FIT_SAMPLES: usize = 8;

/// `log f(v | φ)` summed over axes, using the Toeplitz structure of the Gram
/// matrix over consecutive time stamps (`O(n²)` per axis).
pub fn log_marginal_likelihood(spec: &KernelSpec, residuals: &ResidualSeries) -> Result<f64> {
    let n = residuals.len();
    let axes = residuals.axes();
    let w = toeplitz_whiten(&spec.autocovariance(n), &axes)?;
    let constant = -0.5 * w.logdet - 0.5 * n as f64 * (2.0 * PI).ln();
    Ok(w
        .quadratic_forms
        .iter()
        .map(|q| -0.5 * q + constant)
        .sum())
}

/// Same quantity as [`log_marginal_likelihood`] through a dense Cholesky
/// factor of the Gram matrix.
pub fn log_marginal_likelihood_dense(
    spec: &KernelSpec,
    residuals: &ResidualSeries,
) -> Result<f64> {
    let times: Vec<i64> = residuals.times().collect();
    let n = times.len();
    let factor = psd_factor(&spec.gram(&times).entries)?;
    let constant = -0.5 * factor.logdet() - 0.5 * n as f64 * (2.0 * PI).ln();
    let mut total = 0.0;
    for axis in residuals.axes() {
        let v = nalgebra::DVector::from_vec(axis);
        let alpha = factor.solve_vec(&v)?;
        total += -0.5 * v.dot(&alpha) + constant;
    }
    Ok(total)
}

/// Location/scale of a log-normal density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormal {
    /// Mean of the underlying normal (`ln` units).
    pub location: f64,
    /// Standard deviation of the underlying normal.
    pub scale: f64,
}

impl LogNormal {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        let z = (x.ln() - self.location) / self.scale;
        -x.ln() - self.scale.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * z * z
    }
}

/// Prior over `(σ², l)` for [`log_posterior`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Hyperprior {
    #[default]
    Flat,
    /// Independent log-normal densities on variance and lengthscale.
    LogNormal {
        variance: LogNormal,
        lengthscale: LogNormal,
    },
    /// Independent log-uniform densities on `[lo, hi]` ranges; zero outside.
    LogUniform {
        variance: (f64, f64),
        lengthscale: (f64, f64),
    },
}

impl Hyperprior {
    /// Log prior density at `spec`; `-inf` outside the support.
    pub fn ln_density(&self, spec: &KernelSpec) -> f64 {
        let log_uniform = |x: f64, (lo, hi): (f64, f64)| {
            if x >= lo && x <= hi && hi > lo {
                -x.ln() - (hi / lo).ln().ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        match self {
            Hyperprior::Flat => 0.0,
            Hyperprior::LogNormal {
                variance,
                lengthscale,
            } => variance.ln_pdf(spec.variance()) + lengthscale.ln_pdf(spec.lengthscale()),
            Hyperprior::LogUniform {
                variance,
                lengthscale,
            } => {
                log_uniform(spec.variance(), *variance)
                    + log_uniform(spec.lengthscale(), *lengthscale)
            }
        }
    }
}

/// Unnormalized log posterior `log f(v | φ) + log f(φ)`.
///
/// Returns `-inf` without evaluating the likelihood when the prior density is
/// zero at `spec`.
pub fn log_posterior(
    spec: &KernelSpec,
    residuals: &ResidualSeries,
    prior: &Hyperprior,
) -> Result<f64> {
    let lp = prior.ln_density(spec);
    if lp == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_marginal_likelihood(spec, residuals)? + lp)
}

/// Result of ML-II fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: KernelSpec,
    /// Log marginal likelihood at `spec`.
    pub log_likelihood: f64,
    /// Nelder-Mead iterations of the winning restart.
    pub iterations: usize,
    /// At least one restart met the simplex tolerance.
    pub converged: bool,
    pub restarts: Vec<RestartReport>,
}

/// One multi-start run of the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub initial: KernelSpec,
    /// `-inf` when the likelihood could not be evaluated there.
    pub initial_log_likelihood: f64,
    pub fitted: Option<KernelSpec>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub restarts: usize,
    pub optimizer: NelderMead,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 5,
            optimizer: NelderMead::default(),
        }
    }
}

/// Feasible box in `(ln σ², ln l)`, relative to the data scale.
struct SearchBox {
    ln_variance: (f64, f64),
    ln_lengthscale: (f64, f64),
}

impl SearchBox {
    fn new(second_moment: f64, n: usize) -> Self {
        let lv = second_moment.ln();
        SearchBox {
            ln_variance: (lv - 6.0 * 10f64.ln(), lv + 6.0 * 10f64.ln()),
            ln_lengthscale: ((0.01f64).ln(), (100.0 * n as f64).ln()),
        }
    }

    fn contains(&self, ln_variance: f64, ln_lengthscale: f64) -> bool {
        (self.ln_variance.0..=self.ln_variance.1).contains(&ln_variance)
            && (self.ln_lengthscale.0..=self.ln_lengthscale.1).contains(&ln_lengthscale)
    }
}

/// Fits `(σ², l)` of `family` by maximizing [`log_marginal_likelihood`] with
/// multi-start Nelder-Mead in log-hyperparameter space.
pub fn fit_ml2(
    family: KernelFamily,
    residuals: &ResidualSeries,
    restarts: usize,
) -> Result<FitResult> {
    fit_ml2_with(
        family,
        residuals,
        &FitOptions {
            restarts,
            ..Default::default()
        },
    )
}

pub fn fit_ml2_with(
    family: KernelFamily,
    residuals: &ResidualSeries,
    options: &FitOptions,
) -> Result<FitResult> {
    let n = residuals.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: n,
        });
    }
    if options.restarts == 0 {
        return Err(Error::invalid("fit_ml2 needs at least one restart"));
    }
    let second_moment = residuals
        .values()
        .iter()
        .map(|v| v.norm_squared())
        .sum::<f64>()
        / (n * residuals.dim()) as f64;
    if !(second_moment > 0.0 && second_moment.is_finite()) {
        return Err(Error::DegenerateSeries);
    }
    let bounds = SearchBox::new(second_moment, n);
    let fixed_lengthscale = family == KernelFamily::White;

    let to_spec = |theta: &[f64]| -> Option<KernelSpec> {
        let ln_l = if fixed_lengthscale { 0.0 } else { theta[1] };
        if !fixed_lengthscale && !bounds.contains(theta[0], ln_l) {
            return None;
        }
        if fixed_lengthscale && !(bounds.ln_variance.0..=bounds.ln_variance.1).contains(&theta[0])
        {
            return None;
        }
        KernelSpec::new(family, theta[0].exp(), ln_l.exp()).ok()
    };
    let log_lik = |theta: &[f64]| -> f64 {
        to_spec(theta)
            .and_then(|spec| log_marginal_likelihood(&spec, residuals).ok())
            .filter(|v| v.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    };

    let r = options.restarts;
    let starts: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let frac = (i as f64 + 0.5) / r as f64;
            let ln_v = (0.01 * second_moment).ln()
                + frac * ((100.0 * second_moment).ln() - (0.01 * second_moment).ln());
            let ln_l = frac * (n as f64 / 2.0).ln();
            if fixed_lengthscale {
                vec![ln_v]
            } else {
                vec![ln_v, ln_l]
            }
        })
        .collect();

    let reports: Vec<RestartReport> = starts
        .par_iter()
        .map(|start| {
            let initial_log_likelihood = log_lik(start);
            let outcome = options.optimizer.minimize(|theta| -log_lik(theta), start);
            let initial = to_spec(start).expect("start points lie inside the search box");
            let fitted = to_spec(&outcome.x).filter(|_| outcome.value.is_finite());
            RestartReport {
                initial,
                initial_log_likelihood,
                fitted,
                log_likelihood: -outcome.value,
                iterations: outcome.iterations,
                converged: outcome.converged,
            }
        })
        .collect();

    // Highest likelihood wins; ties go to the lowest restart index.
    let best = reports
        .iter()
        .filter(|rep| rep.fitted.is_some())
        .fold(None::<&RestartReport>, |acc, rep| match acc {
            Some(a) if a.log_likelihood >= rep.log_likelihood => Some(a),
            _ => Some(rep),
        })
        .ok_or_else(|| {
            Error::numerical("likelihood could not be evaluated from any restart point")
        })?;

    Ok(FitResult {
        spec: best.fitted.expect("filtered above"),
        log_likelihood: best.log_likelihood,
        iterations: best.iterations,
        converged: reports.iter().any(|rep| rep.converged),
        restarts: reports.clone(),
    })
}

/// Draws `axes` independent length-`n` samples from `GP(0, k)` at times
/// `0..n`, as `L ε` with `L` the Cholesky factor of the Gram matrix.
pub fn sample_gp(spec: &KernelSpec, n: usize, axes: usize, seed: u64) -> Result<ResidualSeries> {
    if n == 0 || axes == 0 {
        return Err(Error::invalid("sample_gp needs n >= 1 and axes >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<Vec<f64>> = (0..axes)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let (colored, _) = toeplitz_color(&spec.autocovariance(n), &white)?;
    ResidualSeries::from_axes(0, &colored)
}
