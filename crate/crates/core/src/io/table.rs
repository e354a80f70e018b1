use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filter::Estimate;
use crate::series::TimeSeries;

/// A CSV time series with its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Names of the value columns (everything after `t`).
    pub columns: Vec<String>,
    pub series: TimeSeries,
}

impl Table {
    /// Index of a value column given by name or by 1-based position.
    pub fn column_index(&self, column: &str) -> Option<usize> {
        if let Some(i) = self.columns.iter().position(|c| c == column) {
            return Some(i);
        }
        column
            .parse::<usize>()
            .ok()
            .filter(|&i| i >= 1 && i <= self.columns.len())
            .map(|i| i - 1)
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a CSV with header `t,<col1>,...` and consecutive integer times.
pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_table_from(file, path)
}

/// Like [`read_table`], with `path` used only in error messages.
pub fn read_table_from(reader: impl Read, path: &Path) -> Result<Table> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| csv_error(path, e))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("t") {
        return Err(parse_error(path, 1, "header must start with a `t` column"));
    }
    if headers.len() < 2 {
        return Err(parse_error(path, 1, "no value columns after `t`"));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();

    let mut start = None;
    let mut previous: Option<i64> = None;
    let mut values = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let t: i64 = record[0]
            .parse()
            .map_err(|_| parse_error(path, line, format!("time stamp `{}` is not an integer", &record[0])))?;
        if let Some(prev) = previous {
            if t <= prev {
                return Err(parse_error(
                    path,
                    line,
                    format!("time stamp {t} does not increase after {prev}"),
                ));
            }
            if t != prev + 1 {
                return Err(Error::Gap {
                    path: path.to_path_buf(),
                    missing: prev + 1,
                });
            }
        } else {
            start = Some(t);
        }
        previous = Some(t);
        let mut row = DVector::zeros(columns.len());
        for (i, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_error(path, line, format!("`{field}` in column `{}` is not a number", columns[i]))
            })?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    line,
                    format!("non-finite value in column `{}`", columns[i]),
                ));
            }
            row[i] = v;
        }
        values.push(row);
    }
    let Some(start) = start else {
        return Err(parse_error(path, 1, "file has a header but no data rows"));
    };
    Ok(Table {
        columns,
        series: TimeSeries::new(start, values)?,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => parse_error(path, line, format!("expected {expected_len} fields, found {len}")),
        csv::ErrorKind::Utf8 { .. } => parse_error(path, line, "invalid UTF-8"),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

/// Measurement series `t, z1..zm`.
pub fn read_timeseries(path: impl AsRef<Path>) -> Result<TimeSeries> {
    Ok(read_table(path)?.series)
}

/// Residual series `t, r1..rm`; same format as [`read_timeseries`].
pub fn read_residuals(path: impl AsRef<Path>) -> Result<TimeSeries> {
    read_timeseries(path)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_row(out: &mut dyn Write, t: i64, values: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut line = t.to_string();
    for v in values {
        line.push(',');
        line.push_str(&fmt_f64(v));
    }
    line.push('\n');
    out.write_all(line.as_bytes())?;
    Ok(())
}

fn header(prefix: &str, count: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=count {
        h.push_str(&format!(",{prefix}{i}"));
    }
    h.push('\n');
    h
}

/// Writes `t, <prefix>1..<prefix>m`.
pub fn write_timeseries(out: &mut dyn Write, series: &TimeSeries, prefix: &str) -> Result<()> {
    out.write_all(header(prefix, series.dim()).as_bytes())?;
    for (t, v) in series.iter() {
        write_row(out, t, v.iter().copied())?;
    }
    Ok(())
}

/// Writes states `x_0..x_T` as `t, x1..xn` starting at `start_time`.
pub fn write_states(out: &mut dyn Write, start_time: i64, states: &[DVector<f64>]) -> Result<()> {
    let n = states.first().map(|s| s.len()).unwrap_or(0);
    out.write_all(header("x", n).as_bytes())?;
    for (i, x) in states.iter().enumerate() {
        write_row(out, start_time + i as i64, x.iter().copied())?;
    }
    Ok(())
}

fn estimate_header(n: usize, m: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("xhat_{i}")));
    for i in 1..=n {
        cols.extend((1..=n).map(|j| format!("P_{i}{j}")));
    }
    cols.extend((1..=m).map(|i| format!("innov_{i}")));
    for i in 1..=m {
        cols.extend((1..=m).map(|j| format!("L_{i}{j}")));
    }
    let mut h = cols.join(",");
    h.push('\n');
    h
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

/// Writes `t, xhat_1..xhat_n, P_11..P_nn, innov_1..innov_m, L_11..L_mm`,
/// matrices row-major. An empty list with unknown dimensions writes `n = m = 1`
/// headers.
pub fn write_estimates(
    out: &mut dyn Write,
    estimates: &[Estimate],
    state_dim: usize,
    meas_dim: usize,
) -> Result<()> {
    out.write_all(estimate_header(state_dim, meas_dim).as_bytes())?;
    for e in estimates {
        write_estimate_row(out, e)?;
    }
    Ok(())
}

pub(crate) fn write_estimate_header(out: &mut dyn Write, n: usize, m: usize) -> Result<()> {
    out.write_all(estimate_header(n, m).as_bytes())?;
    Ok(())
}

pub(crate) fn write_estimate_row(out: &mut dyn Write, e: &Estimate) -> Result<()> {
    let values = e
        .mean
        .iter()
        .copied()
        .chain(row_major(&e.covariance))
        .chain(e.innovation.iter().copied())
        .chain(row_major(&e.innovation_covariance));
    write_row(out, e.time, values)
}

/// One row of an estimates file.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub time: i64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub innovation: DVector<f64>,
    pub innovation_covariance: DMatrix<f64>,
}

impl From<&Estimate> for EstimateRow {
    fn from(e: &Estimate) -> Self {
        EstimateRow {
            time: e.time,
            mean: e.mean.clone(),
            covariance: e.covariance.clone(),
            innovation: e.innovation.clone(),
            innovation_covariance: e.innovation_covariance.clone(),
        }
    }
}

/// Reads a file written by [`write_estimates`].
pub fn read_estimates(path: impl AsRef<Path>) -> Result<Vec<EstimateRow>> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or("");
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = names.iter().filter(|c| c.starts_with("xhat_")).count();
    let m = names.iter().filter(|c| c.starts_with("innov_")).count();
    if names.first() != Some(&"t") || names.len() != 1 + n + n * n + m + m * m {
        return Err(parse_error(path, 1, "not an estimates header"));
    }
    if text.lines().count() <= 1 {
        return Ok(Vec::new());
    }
    let table = read_table_from(text.as_bytes(), &PathBuf::from(path))?;
    Ok(table
        .series
        .iter()
        .map(|(t, v)| {
            let mut at = 0;
            let mut take = |k: usize| {
                let s = v.rows(at, k).clone_owned();
                at += k;
                s
            };
            let mean = take(n);
            let covariance = DMatrix::from_row_slice(n, n, take(n * n).as_slice());
            let innovation = take(m);
            let innovation_covariance = DMatrix::from_row_slice(m, m, take(m * m).as_slice());
            EstimateRow {
                time: t,
                mean,
                covariance,
                innovation,
                innovation_covariance,
            }
        })
        .collect())
}
