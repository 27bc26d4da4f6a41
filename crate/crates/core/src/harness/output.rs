//! CSV and metadata writers.
//!
//! Indices (replicate, policy, outcome) are 1-based; a missing outcome is
//! written as `-1`. Reals carry 17 significant digits and lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::run::{Prepared, RegretTrace};
use super::summary::{Summary, SUMMARY_COLUMNS};
use crate::error::Result;
use crate::matrix_io::fmt_f64;
use crate::rng::GENERATOR;

pub const TRACE_COLUMNS: [&str; 12] = [
    "experiment_id",
    "replicate",
    "seed",
    "t",
    "learner",
    "env",
    "eta",
    "chosen_policy",
    "outcome",
    "sampled_loss",
    "expected_loss",
    "cum_pseudo_regret",
];

pub fn trace_csv(prep: &Prepared, traces: &[RegretTrace]) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    let id = prep.id();
    let learner = prep.kind.name();
    let env = prep.env.kind_name();
    for tr in traces {
        for r in &tr.rows {
            let outcome = r.outcome.map_or(-1, |x| x as i64 + 1);
            writeln!(
                out,
                "{id},{},{},{},{learner},{env},{},{},{outcome},{},{},{}",
                tr.replicate + 1,
                tr.seed,
                r.t,
                fmt_f64(r.eta),
                r.chosen + 1,
                fmt_f64(r.sampled_loss),
                fmt_f64(r.expected_loss),
                fmt_f64(r.cum_pseudo_regret),
            )
            .expect("write to string");
        }
    }
    out
}

pub fn summary_header() -> String {
    SUMMARY_COLUMNS.join(",")
}

pub fn summary_row(s: &Summary) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        s.experiment_id,
        s.learner,
        s.env,
        s.horizon,
        s.replicates,
        fmt_f64(s.capacity_lower),
        fmt_f64(s.capacity_upper),
        fmt_f64(s.mean_final_regret),
        fmt_f64(s.stderr_final_regret),
        fmt_f64(s.thm_bound),
    )
}

pub fn summary_csv(s: &Summary) -> String {
    format!("{}\n{}\n", summary_header(), summary_row(s))
}

/// `key = value` lines describing how a trace was produced.
pub fn trace_meta(prep: &Prepared) -> String {
    let e = &prep.config.experiment;
    format!(
        "experiment_id = {}\nconfig_sha256 = {}\nbase_seed = {}\nreplicates = {}\ngenerator = {GENERATOR}\nversion = {} {}\n",
        e.id,
        prep.config.hash(),
        e.seed,
        e.replicates,
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
    )
}

/// Paths written by [`write_outputs`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub trace: PathBuf,
    pub meta: PathBuf,
    pub summary: PathBuf,
}

impl OutputFiles {
    pub fn new(dir: &Path, id: &str) -> Self {
        OutputFiles {
            trace: dir.join(format!("{id}_trace.csv")),
            meta: dir.join(format!("{id}_trace.meta")),
            summary: dir.join(format!("{id}_summary.csv")),
        }
    }
}

pub fn write_outputs(dir: &Path, prep: &Prepared, traces: &[RegretTrace], summary: &Summary) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let files = OutputFiles::new(dir, prep.id());
    fs::write(&files.trace, trace_csv(prep, traces))?;
    fs::write(&files.meta, trace_meta(prep))?;
    fs::write(&files.summary, summary_csv(summary))?;
    Ok(files)
}
