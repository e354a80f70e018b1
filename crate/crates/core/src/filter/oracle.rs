use nalgebra::{DMatrix, DVector};

use super::exact::noise_nugget;
use super::model::StateSpaceModel;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numerics::{psd_factor, symmetrize};
use crate::series::TimeSeries;

/// Longest series [`batch_oracle`] accepts.
pub const ORACLE_MAX_LEN: usize = 200;

/// Exact filtering distributions `p(x_t | z_1..z_t)` by dense Gaussian
/// conditioning on the joint of all states and measurements.
///
/// The prior `N(x0, P0)` sits one step before the first measurement. The
/// joint covariance of the measurements is factored once; conditioning on a
/// prefix uses the leading block of that factor.
pub fn batch_oracle(
    model: &StateSpaceModel,
    kernel: &KernelSpec,
    measurements: &TimeSeries,
) -> Result<Vec<(DVector<f64>, DMatrix<f64>)>> {
    let len = measurements.len();
    if len > ORACLE_MAX_LEN {
        return Err(Error::invalid(format!(
            "batch oracle handles at most {ORACLE_MAX_LEN} steps, got {len}"
        )));
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    let n = model.state_dim();
    let m = model.meas_dim();
    if measurements.dim() != m {
        return Err(Error::invalid(format!(
            "measurements have {} components, model expects {m}",
            measurements.dim()
        )));
    }
    let times: Vec<i64> = measurements.times().collect();

    // Unconditional moments and cross-covariances Cov(x_i, x_j), i ≤ j.
    let mut means = Vec::with_capacity(len);
    let mut covs: Vec<DMatrix<f64>> = Vec::with_capacity(len);
    let mut x = model.initial_mean().clone();
    let mut p = model.initial_covariance().clone();
    for &t in &times {
        let f = model.transition(t - 1)?;
        x = &*f * x;
        p = &*f * p * f.transpose() + &*model.process_noise(t)?;
        symmetrize(&mut p);
        means.push(x.clone());
        covs.push(p.clone());
    }
    let mut cross = vec![vec![DMatrix::zeros(0, 0); len]; len];
    for i in 0..len {
        cross[i][i] = covs[i].clone();
        for j in (i + 1)..len {
            let f = model.transition(times[j] - 1)?;
            cross[i][j] = &cross[i][j - 1] * f.transpose();
        }
    }
    let obs: Vec<DMatrix<f64>> = times
        .iter()
        .map(|&t| model.observation(t).map(|h| h.into_owned()))
        .collect::<Result<_>>()?;

    let nugget = noise_nugget(kernel);
    let mut cov_z = DMatrix::zeros(len * m, len * m);
    for i in 0..len {
        for j in i..len {
            let mut block = &obs[i] * &cross[i][j] * obs[j].transpose();
            let mut k = kernel.eval(times[i], times[j]);
            if i == j {
                k += nugget;
            }
            for r in 0..m {
                block[(r, r)] += k;
            }
            cov_z.view_mut((i * m, j * m), (m, m)).copy_from(&block);
            cov_z
                .view_mut((j * m, i * m), (m, m))
                .copy_from(&block.transpose());
        }
    }
    symmetrize(&mut cov_z);
    let factor = psd_factor(&cov_z)
        .map_err(|e| Error::numerical(format!("joint measurement covariance: {e}")))?;
    let lower = factor.lower();

    let mut deviation = DVector::zeros(len * m);
    for (i, z) in measurements.values().iter().enumerate() {
        deviation
            .rows_mut(i * m, m)
            .copy_from(&(z - &obs[i] * &means[i]));
    }

    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let rows = (t + 1) * m;
        let lead = lower.view((0, 0), (rows, rows));
        // Cov(Z_{1..t}, x_t), block j = H_j Cov(x_j, x_t).
        let mut c = DMatrix::zeros(rows, n);
        for j in 0..=t {
            c.view_mut((j * m, 0), (m, n))
                .copy_from(&(&obs[j] * &cross[j][t]));
        }
        let y = lead
            .solve_lower_triangular(&c)
            .ok_or_else(|| Error::numerical("singular joint factor"))?;
        let e = lead
            .solve_lower_triangular(&deviation.rows(0, rows))
            .ok_or_else(|| Error::numerical("singular joint factor"))?;
        let mean = &means[t] + y.transpose() * e;
        let mut cov = &covs[t] - y.transpose() * &y;
        symmetrize(&mut cov);
        out.push((mean, cov));
    }
    Ok(out)
}
