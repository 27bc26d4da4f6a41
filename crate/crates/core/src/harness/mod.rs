//! Experiment orchestration: config, run loop, summaries, output files and
//! sweeps.

pub mod config;
pub mod output;
pub mod run;
pub mod summary;
pub mod sweep;

use std::path::Path;

pub use config::{gap_means, CapacitySetting, ExperimentConfig, PolicySource};
pub use output::{trace_csv, write_outputs, OutputFiles, TRACE_COLUMNS};
pub use run::{run_experiment, run_replicate, Prepared, RegretTrace, TraceRow};
pub use summary::{log_log_slope, mean_curve, mean_stderr, summarize, Summary, SUMMARY_COLUMNS};
pub use sweep::{run_sweep, SweepGrid, SweepOutcome};

use crate::error::Result;
use crate::par::Execution;

/// Runs a config end to end and writes its files under
/// `base/<output_dir>`.
pub fn simulate(config: ExperimentConfig, base: &Path, exec: Execution) -> Result<(Summary, OutputFiles)> {
    let prep = Prepared::new(config, base)?;
    let traces = run_experiment(&prep, exec)?;
    let summary = summarize(&prep, &traces);
    let files = write_outputs(&prep.output_dir(base), &prep, &traces, &summary)?;
    Ok((summary, files))
}
