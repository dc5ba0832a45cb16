//! Experiment runner and reporting: kernel × policy × seed matrices,
//! speedup tables, rank histograms and plain-data exports.

pub mod config;
pub mod inspect;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{output_dir_override, ExperimentConfig, PolicyEntry, PolicyOverrides, OUTPUT_ENV};
pub use inspect::{inspect_log, read_decisions, repeated_no_instr, summarize_decisions};
pub use report::{
    compare, emit, geomean, ranks_csv, read_runs_csv, render_table, speedups_csv, speedups_dat, write_runs_csv,
    Comparison, RANKS_FILE, RUNS_FILE, RUNS_HEADER, SPEEDUPS_DAT_FILE, SPEEDUPS_FILE,
};
pub use run::{run, CellResult, RunStats};

use crate::error::Result;

/// Everything one `compare` invocation produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub cells: Vec<CellResult>,
    pub comparison: Comparison,
    pub files: Vec<PathBuf>,
}

/// Runs the matrix, compares against the configured baseline and writes all
/// report files to `out`.
pub fn run_and_compare(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<Report> {
    let cells = run(cfg, base)?;
    let stats: Vec<RunStats> = cells.iter().map(|c| c.stats.clone()).collect();
    let comparison = compare(&stats, &cfg.baseline)?;
    let files = emit(out, &cells, Some(&comparison), cfg.export_theta)?;
    Ok(Report {
        cells,
        comparison,
        files,
    })
}
