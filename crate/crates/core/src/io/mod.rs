//! File formats: CSV time series and estimates, TOML run configurations and
//! fitted-kernel files.

mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};

pub use config::{
    read_config, read_kernel_file, write_config, FitSummary, KernelFile, RunConfig,
};
pub use table::{
    fmt_f64, read_estimates, read_residuals, read_table, read_table_from, read_timeseries,
    write_estimates, write_states, write_timeseries, EstimateRow, Table,
};
pub(crate) use table::{write_estimate_header, write_estimate_row};

/// Opens `path` for writing; `-` is standard output.
pub fn create_output(path: &str) -> crate::Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}
