//! The `gpkf` command-line front end.
//!
//! Exit codes: 0 success, 1 input or parse error, 2 numerical failure,
//! 3 insufficient data. Data go to the `--out` file (`-` is standard output);
//! one-line summaries go to standard output, or to standard error when the
//! data themselves are written to standard output.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filter::{
    batch_oracle, run_kalman, Estimate, GpFilter, Moments, WindowCapacity, WindowPolicy,
};
use crate::gp::{acf, fit_ml2, log_marginal_likelihood};
use crate::io::{
    create_output, fmt_f64, read_config, read_table, read_timeseries, write_estimate_header,
    write_estimate_row, write_states, write_timeseries, FitSummary, KernelFile, RunConfig,
};
use crate::kernels::KernelFamily;
use crate::sim::{simulate, SimulationResult};

#[derive(Debug, Parser)]
#[command(name = "gpkf", version, about = "Kalman filtering with Gaussian-process measurement noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a trajectory and write states, measurements and noise CSVs.
    Simulate(SimulateArgs),
    /// Fit kernel hyperparameters to a residual CSV by maximum marginal likelihood.
    Fit(FitArgs),
    /// Print the sample autocorrelation of one column.
    Acf(AcfArgs),
    /// Run the GP-noise filter configured in a run file over a measurement CSV.
    Filter(FilterArgs),
    /// Compare filter variants on simulated data over many seeds.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Writes <PREFIX>_states.csv, <PREFIX>_measurements.csv and <PREFIX>_noise.csv.
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Residual CSV with columns t, r1..rm.
    #[arg(long)]
    pub input: PathBuf,
    /// Kernel family: white, rbf, exponential, matern32 or matern52.
    #[arg(long, default_value = "exponential")]
    pub family: KernelFamily,
    /// Number of optimizer starting points.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Subtract the per-axis sample mean before fitting.
    #[arg(long, default_value_t = false)]
    pub demean: bool,
    /// Output kernel file (TOML), `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct AcfArgs {
    /// CSV with a `t` column followed by value columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Value column, by header name or 1-based position.
    #[arg(long, default_value = "1")]
    pub column: String,
    /// Largest lag to report.
    #[arg(long, default_value_t = 40)]
    pub max_lag: usize,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Run configuration (TOML); its [window] table selects the variant.
    #[arg(long)]
    pub config: PathBuf,
    /// Measurement CSV with columns t, z1..zm.
    #[arg(long)]
    pub measurements: PathBuf,
    /// Estimates CSV, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run configuration (TOML); model, kernel, horizon and first seed.
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated variants: kf, gp-<N>, gp-full, printed-<N>, printed-full, oracle.
    #[arg(long, default_value = "kf,gp-2,gp-5,gp-full", value_delimiter = ',')]
    pub variants: Vec<Variant>,
    /// Number of seeds, starting at the config seed.
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    /// Report CSV, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
}

/// Exit code for an error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::NumericalFailure(_) => 2,
        Error::InsufficientData { .. } | Error::DegenerateSeries => 3,
        Error::InvalidThreshold(_)
        | Error::WindowCorrupt(_)
        | Error::InvalidInput(_)
        | Error::Parse { .. }
        | Error::Gap { .. }
        | Error::Schema { .. }
        | Error::Io(_) => 1,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a).map(|_| 0),
        Command::Fit(a) => cmd_fit(&a).map(|_| 0),
        Command::Acf(a) => cmd_acf(&a).map(|_| 0),
        Command::Filter(a) => cmd_filter(&a).map(|_| 0),
        Command::Compare(a) => cmd_compare(&a).map(|ok| if ok { 0 } else { 2 }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn summary(data_on_stdout: bool, line: &str) {
    if data_on_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let config = read_config(&args.config)?;
    let sim = simulate(&config.model, &config.kernel, config.horizon, config.seed)?;
    let prefix = &args.out_prefix;
    let mut out = create_output(&format!("{prefix}_states.csv"))?;
    write_states(&mut out, 0, &sim.states)?;
    out.flush()?;
    let mut out = create_output(&format!("{prefix}_measurements.csv"))?;
    write_timeseries(&mut out, &sim.measurements, "z")?;
    out.flush()?;
    let mut out = create_output(&format!("{prefix}_noise.csv"))?;
    write_timeseries(&mut out, &sim.noise, "v")?;
    out.flush()?;
    println!(
        "steps={},seed={},prefix={prefix}",
        sim.measurements.len(),
        sim.seed
    );
    Ok(())
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let mut residuals = read_table(&args.input)?.series;
    if args.demean {
        residuals = residuals.demeaned();
    }
    let fit = fit_ml2(args.family, &residuals, args.restarts)?;
    let file = KernelFile {
        kernel: fit.spec,
        fit: Some(FitSummary {
            log_likelihood: fit.log_likelihood,
            iterations: fit.iterations,
            converged: fit.converged,
            demeaned: args.demean,
        }),
    };
    let mut out = create_output(&args.out)?;
    out.write_all(file.to_toml_string()?.as_bytes())?;
    out.flush()?;
    summary(
        args.out == "-",
        &format!(
            "family={},variance={},lengthscale={},loglik={},converged={}",
            fit.spec.family(),
            fmt_f64(fit.spec.variance()),
            fmt_f64(fit.spec.lengthscale()),
            fmt_f64(fit.log_likelihood),
            fit.converged
        ),
    );
    Ok(())
}

/// Re-evaluates a fitted kernel file on residuals, as the `fit` summary did.
pub fn refit_log_likelihood(file: &KernelFile, residuals: &crate::TimeSeries) -> Result<f64> {
    let demean = file.fit.as_ref().is_some_and(|f| f.demeaned);
    let r = if demean { residuals.demeaned() } else { residuals.clone() };
    log_marginal_likelihood(&file.kernel, &r)
}

pub fn cmd_acf(args: &AcfArgs) -> Result<()> {
    let table = read_table(&args.input)?;
    let column = table.column_index(&args.column).ok_or_else(|| {
        Error::invalid(format!(
            "no column `{}` (available: {})",
            args.column,
            table.columns.join(", ")
        ))
    })?;
    let result = acf(&table.series.axis(column), args.max_lag)?;
    let mut out = create_output("-")?;
    writeln!(out, "# band=±{}", fmt_f64(result.confidence_band))?;
    writeln!(out, "lag,coefficient")?;
    for (lag, c) in result.lags.iter().zip(&result.coefficients) {
        writeln!(out, "{lag},{}", fmt_f64(*c))?;
    }
    out.flush()?;
    Ok(())
}

fn policy_name(policy: WindowPolicy) -> &'static str {
    match policy {
        WindowPolicy::Fixed(_) => "fixed",
        WindowPolicy::CorrelationThreshold(_) => "k_min",
        WindowPolicy::CovarianceThreshold(_) => "tau",
        WindowPolicy::Unbounded => "unbounded",
    }
}

pub fn cmd_filter(args: &FilterArgs) -> Result<()> {
    let config = read_config(&args.config)?;
    let measurements = read_timeseries(&args.measurements)?;
    if measurements.dim() != config.model.meas_dim() {
        return Err(Error::invalid(format!(
            "measurements have {} columns, the model expects {}",
            measurements.dim(),
            config.model.meas_dim()
        )));
    }
    let mut filter = GpFilter::new(
        config.model.clone(),
        config.kernel,
        config.window,
        config.moments,
        measurements.start_time(),
    )?;
    let mut out = create_output(&args.out)?;
    write_estimate_header(&mut out, config.model.state_dim(), config.model.meas_dim())?;
    let mut steps = 0;
    let mut last_trace = filter.state().covariance().trace();
    let mut failure = None;
    for z in measurements.values() {
        match filter.step(z) {
            Ok(est) => {
                write_estimate_row(&mut out, &est)?;
                last_trace = est.covariance.trace();
                steps += 1;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    out.flush()?;
    let effective = match filter.capacity() {
        WindowCapacity::Bounded(n) => n.to_string(),
        WindowCapacity::Unbounded => "unbounded".to_string(),
    };
    let mut line = format!(
        "steps={steps},final_trace_P={},window_policy={},effective_N={effective}",
        fmt_f64(last_trace),
        policy_name(config.window)
    );
    if let Some(f) = filter.freeze() {
        line.push_str(&format!(",frozen_at={}", f.time));
    }
    summary(args.out == "-", &line);
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// A filter configuration in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Classical Kalman filter with `V = k(0) I`.
    Kalman,
    /// GP-noise filter; `None` is the unbounded window.
    Gp(Moments, Option<usize>),
    /// Dense batch conditioning (short horizons only).
    Oracle,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Kalman => f.write_str("kf"),
            Variant::Oracle => f.write_str("oracle"),
            Variant::Gp(m, n) => {
                let prefix = match m {
                    Moments::Exact => "gp",
                    Moments::Printed => "printed",
                };
                match n {
                    Some(n) => write!(f, "{prefix}-{n}"),
                    None => write!(f, "{prefix}-full"),
                }
            }
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "kf" => return Ok(Variant::Kalman),
            "oracle" => return Ok(Variant::Oracle),
            _ => {}
        }
        let (moments, rest) = if let Some(rest) = s.strip_prefix("gp-") {
            (Moments::Exact, rest)
        } else if let Some(rest) = s.strip_prefix("printed-") {
            (Moments::Printed, rest)
        } else {
            return Err(Error::invalid(format!("unknown variant `{s}`")));
        };
        if rest == "full" {
            return Ok(Variant::Gp(moments, None));
        }
        match rest.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Variant::Gp(moments, Some(n))),
            _ => Err(Error::invalid(format!("bad window size in variant `{s}`"))),
        }
    }
}

/// Metrics of one variant on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantRun {
    pub variant: Variant,
    pub seed: u64,
    /// Mean over steps of `|x̂_t - x_t|²`.
    pub mse: f64,
    /// Mean of `trace(P_t)` over the second half of the run.
    pub mean_variance: f64,
    /// Median wall time per step in microseconds, excluding window warm-up.
    pub step_time_us: f64,
    pub error: Option<String>,
}

/// Per-seed rows in seed order, then variants in request order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub rows: Vec<VariantRun>,
}

/// Aggregate over the seeds where the variant succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub variant: Variant,
    pub mse: f64,
    pub mean_variance: f64,
    pub step_time_us: f64,
    pub failures: usize,
}

impl CompareReport {
    pub fn runs(&self, variant: Variant) -> impl Iterator<Item = &VariantRun> + '_ {
        self.rows.iter().filter(move |r| r.variant == variant)
    }

    pub fn aggregate(&self, variant: Variant) -> Aggregate {
        let ok: Vec<&VariantRun> = self.runs(variant).filter(|r| r.error.is_none()).collect();
        let mean = |f: fn(&VariantRun) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
            }
        };
        Aggregate {
            variant,
            mse: mean(|r| r.mse),
            mean_variance: mean(|r| r.mean_variance),
            step_time_us: mean(|r| r.step_time_us),
            failures: self.runs(variant).count() - ok.len(),
        }
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }

    /// CSV: `seed,variant,mse,mean_variance,step_time_us,status`, one row
    /// per seed and variant, then one `seed=all` row per variant.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "seed,variant,mse,mean_variance,step_time_us,status")?;
        for r in &self.rows {
            let status = if r.error.is_some() { "failed" } else { "ok" };
            writeln!(
                out,
                "{},{},{},{},{:.3},{status}",
                r.seed,
                r.variant,
                fmt_f64(r.mse),
                fmt_f64(r.mean_variance),
                r.step_time_us
            )?;
        }
        for v in &self.variants {
            let a = self.aggregate(*v);
            let status = if a.failures == 0 { "ok" } else { "failed" };
            writeln!(
                out,
                "all,{v},{},{},{:.3},{status}",
                fmt_f64(a.mse),
                fmt_f64(a.mean_variance),
                a.step_time_us
            )?;
        }
        Ok(())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

fn metrics(
    sim: &SimulationResult,
    means: &[DVector<f64>],
    covariances: &[DMatrix<f64>],
) -> (f64, f64) {
    let truth = sim.measured_states();
    let mse = means
        .iter()
        .zip(truth)
        .map(|(m, x)| (m - x).norm_squared())
        .sum::<f64>()
        / means.len() as f64;
    let half = covariances.len() / 2;
    let tail = &covariances[half..];
    let var = tail.iter().map(|p| p.trace()).sum::<f64>() / tail.len() as f64;
    (mse, var)
}

/// Runs one variant on one simulated data set.
pub fn run_variant(config: &RunConfig, variant: Variant, sim: &SimulationResult) -> VariantRun {
    let z = &sim.measurements;
    let mut times = Vec::with_capacity(z.len());
    let mut warmup = 0;
    let outcome: Result<Vec<(DVector<f64>, DMatrix<f64>)>> = match variant {
        Variant::Kalman => {
            let v = DMatrix::identity(z.dim(), z.dim()) * config.kernel.variance();
            let start = Instant::now();
            let run = run_kalman(&config.model, &v, z);
            times.push(start.elapsed().as_secs_f64() / z.len() as f64);
            run.into_result()
                .map(|es| es.into_iter().map(|e| (e.mean, e.covariance)).collect())
        }
        Variant::Oracle => {
            let start = Instant::now();
            let out = batch_oracle(&config.model, &config.kernel, z);
            times.push(start.elapsed().as_secs_f64() / z.len() as f64);
            out
        }
        Variant::Gp(moments, window) => {
            let policy = match window {
                Some(n) => {
                    warmup = n - 1;
                    WindowPolicy::Fixed(n)
                }
                None => WindowPolicy::Unbounded,
            };
            GpFilter::new(config.model.clone(), config.kernel, policy, moments, z.start_time())
                .and_then(|mut filter| {
                    let mut out = Vec::with_capacity(z.len());
                    for v in z.values() {
                        let start = Instant::now();
                        let est: Estimate = filter.step(v)?;
                        times.push(start.elapsed().as_secs_f64());
                        out.push((est.mean, est.covariance));
                    }
                    Ok(out)
                })
        }
    };
    let steady = if times.len() > warmup { times.split_off(warmup) } else { times };
    let step_time_us = median(steady) * 1e6;
    match outcome {
        Ok(out) => {
            let (means, covs): (Vec<_>, Vec<_>) = out.into_iter().unzip();
            let (mse, mean_variance) = metrics(sim, &means, &covs);
            VariantRun {
                variant,
                seed: sim.seed,
                mse,
                mean_variance,
                step_time_us,
                error: None,
            }
        }
        Err(e) => VariantRun {
            variant,
            seed: sim.seed,
            mse: f64::NAN,
            mean_variance: f64::NAN,
            step_time_us,
            error: Some(e.to_string()),
        },
    }
}

/// Simulates once per seed (`config.seed`, `config.seed + 1`, ...) and runs
/// every variant on the same measurements. Seeds run one after another so the
/// per-step timings are not disturbed by other work.
pub fn compare(config: &RunConfig, variants: &[Variant], seeds: usize) -> Result<CompareReport> {
    if variants.is_empty() {
        return Err(Error::invalid("at least one variant is required"));
    }
    if seeds == 0 {
        return Err(Error::invalid("at least one seed is required"));
    }
    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let mut rows = Vec::with_capacity(seeds * variants.len());
    for &seed in &seed_list {
        let sim = simulate(&config.model, &config.kernel, config.horizon, seed)?;
        for &v in variants {
            rows.push(run_variant(config, v, &sim));
        }
    }
    Ok(CompareReport {
        variants: variants.to_vec(),
        seeds: seed_list,
        rows,
    })
}

pub fn cmd_compare(args: &CompareArgs) -> Result<bool> {
    let config = read_config(&args.config)?;
    let report = compare(&config, &args.variants, args.seeds)?;
    for r in &report.rows {
        if let Some(e) = &r.error {
            eprintln!("seed {} variant {}: {e}", r.seed, r.variant);
        }
    }
    let mut out = create_output(&args.out)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(report.all_ok())
}
