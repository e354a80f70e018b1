//! Stationary covariance functions over integer time stamps.
//!
//! Every kernel is `k(t, t') = σ² ρ(|t - t'| / l)` where `ρ` is the
//! correlation profile of the family and `l` is measured in timesteps.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const SQRT_5: f64 = 2.236_067_977_499_79;

/// Kernel families supported as measurement-noise models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// Kronecker delta; i.i.d. Gaussian noise.
    White,
    /// Squared exponential `exp(-r²/(2l²))`.
    Rbf,
    /// `exp(-r/l)`, the Ornstein-Uhlenbeck covariance (Matérn ν = 1/2).
    Exponential,
    /// Matérn ν = 3/2.
    Matern32,
    /// Matérn ν = 5/2.
    Matern52,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::White,
        KernelFamily::Rbf,
        KernelFamily::Exponential,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::White => "white",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Exponential => "exponential",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        }
    }

    /// Correlation at scaled distance `s = r / l`, for `s >= 0`.
    pub fn correlation(self, s: f64) -> f64 {
        match self {
            KernelFamily::White => {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Rbf => (-0.5 * s * s).exp(),
            KernelFamily::Exponential => (-s).exp(),
            KernelFamily::Matern32 => {
                let a = SQRT_3 * s;
                (1.0 + a) * (-a).exp()
            }
            KernelFamily::Matern52 => {
                let a = SQRT_5 * s;
                (1.0 + a + 5.0 * s * s / 3.0) * (-a).exp()
            }
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown kernel family `{s}` (expected one of white, rbf, exponential, matern32, matern52)"
                ))
            })
    }
}

/// A stationary kernel with its hyperparameters.
///
/// Invariants: `variance > 0`, `lengthscale > 0`, both finite. The lengthscale
/// of a [`KernelFamily::White`] kernel is unused and always stored as 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub struct KernelSpec {
    family: KernelFamily,
    variance: f64,
    lengthscale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    family: KernelFamily,
    variance: f64,
    #[serde(default = "one")]
    lengthscale: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawKernel> for KernelSpec {
    type Error = Error;

    fn try_from(raw: RawKernel) -> Result<Self> {
        KernelSpec::new(raw.family, raw.variance, raw.lengthscale)
    }
}

impl From<KernelSpec> for RawKernel {
    fn from(k: KernelSpec) -> Self {
        RawKernel {
            family: k.family,
            variance: k.variance,
            lengthscale: k.lengthscale,
        }
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, variance: f64, lengthscale: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::invalid(format!(
                "kernel variance must be positive and finite, got {variance}"
            )));
        }
        let lengthscale = if family == KernelFamily::White {
            1.0
        } else {
            lengthscale
        };
        if !(lengthscale.is_finite() && lengthscale > 0.0) {
            return Err(Error::invalid(format!(
                "kernel lengthscale must be positive and finite, got {lengthscale}"
            )));
        }
        Ok(KernelSpec {
            family,
            variance,
            lengthscale,
        })
    }

    pub fn white(variance: f64) -> Result<Self> {
        Self::new(KernelFamily::White, variance, 1.0)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Covariance at integer lag `r = |t - t'|`.
    pub fn at_lag(&self, lag: u64) -> f64 {
        if lag == 0 {
            return self.variance;
        }
        self.variance * self.family.correlation(lag as f64 / self.lengthscale)
    }

    /// `k(t, t')`.
    pub fn eval(&self, t: i64, t_prime: i64) -> f64 {
        self.at_lag(t.abs_diff(t_prime))
    }

    /// `[k(0), k(1), ..., k(len - 1)]`, the first row of the Toeplitz Gram
    /// matrix over `len` consecutive time stamps.
    pub fn autocovariance(&self, len: usize) -> Vec<f64> {
        (0..len as u64).map(|r| self.at_lag(r)).collect()
    }

    /// Gram matrix over arbitrary time stamps.
    pub fn gram(&self, times: &[i64]) -> GramMatrix {
        let n = times.len();
        let entries = DMatrix::from_fn(n, n, |i, j| self.eval(times[i], times[j]));
        GramMatrix {
            entries,
            times: times.to_vec(),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(variance={}, lengthscale={})",
            self.family, self.variance, self.lengthscale
        )
    }
}

/// Kernel evaluations `[K]_ij = k(t_i, t_j)` together with the time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub times: Vec<i64>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.times.len()
    }
}

/// Builds the Gram matrix of `spec` over `times`.
pub fn gram(spec: &KernelSpec, times: &[i64]) -> GramMatrix {
    spec.gram(times)
}
