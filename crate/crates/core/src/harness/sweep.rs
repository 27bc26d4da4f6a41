//! Grids of experiments.
//!
//! A sweep file is an experiment config plus a `[sweep]` table mapping
//! `"section.key"` to a list of values. The grid is the Cartesian product
//! of the lists:
//!
//! ```toml
//! [sweep]
//! "policies.epsilon" = [1.0, 0.5, 0.25]
//! "learner.name" = ["exp4-fixed", "exp3-direct"]
//! ```
//!
//! Each cell runs as its own experiment with id `<id>-<cell>` (cells
//! numbered from 1) unless the grid has a single cell or sweeps
//! `experiment.id` itself.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use toml::{Table, Value};

use super::config::ExperimentConfig;
use super::output::{summary_header, summary_row, write_outputs, OutputFiles};
use super::run::{run_experiment, Prepared};
use super::summary::{summarize, Summary};
use crate::error::{Error, Result};
use crate::par::Execution;

const SECTIONS: [&str; 4] = ["experiment", "policies", "environment", "learner"];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    /// `(parameter, value)` in axis order.
    pub assignment: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub id: String,
    pub output_dir: PathBuf,
    pub parameters: Vec<String>,
    pub cells: Vec<SweepCell>,
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl SweepGrid {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let sweep = match table.remove("sweep") {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(Error::Config("`sweep` must be a table".into())),
            None => return Err(Error::Config("missing [sweep] section".into())),
        };
        let base = ExperimentConfig::deserialize_table(table.clone())?;

        let mut axes: Vec<(String, Vec<Value>)> = Vec::new();
        for (param, values) in sweep {
            let (section, key) = param
                .split_once('.')
                .filter(|(s, k)| SECTIONS.contains(s) && !k.is_empty() && !k.contains('.'))
                .ok_or_else(|| Error::Config(format!("sweep parameter `{param}` is not of the form section.key")))?;
            let Value::Array(values) = values else {
                return Err(Error::Config(format!("sweep values for `{param}` must be a list")));
            };
            axes.push((format!("{section}.{key}"), values));
        }
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        if axes.is_empty() || total == 0 {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        let rename = total > 1 && !axes.iter().any(|(p, _)| p == "experiment.id");

        let mut cells = Vec::with_capacity(total);
        for index in 0..total {
            let mut rest = index;
            let mut assignment = Vec::new();
            let mut cell = table.clone();
            for (param, values) in axes.iter().rev() {
                let v = values[rest % values.len()].clone();
                rest /= values.len();
                let (section, key) = param.split_once('.').expect("checked above");
                match cell.get_mut(section) {
                    Some(Value::Table(t)) => {
                        t.insert(key.to_string(), v.clone());
                    }
                    _ => return Err(Error::Config(format!("section `{section}` missing from sweep base"))),
                }
                assignment.push((param.clone(), v));
            }
            assignment.reverse();
            let mut config = ExperimentConfig::deserialize_table(cell)
                .map_err(|e| Error::Config(format!("sweep cell {}: {e}", index + 1)))?;
            if rename {
                config.experiment.id = format!("{}-{}", base.experiment.id, index + 1);
            }
            cells.push(SweepCell { assignment, config });
        }
        Ok(SweepGrid {
            id: base.experiment.id,
            output_dir: base.experiment.output_dir,
            parameters: axes.into_iter().map(|(p, _)| p).collect(),
            cells,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub summaries: Vec<Summary>,
    pub combined: PathBuf,
    pub manifest: PathBuf,
}

/// Summary columns followed by one column per swept parameter.
pub fn combined_csv(grid: &SweepGrid, summaries: &[Summary]) -> String {
    let mut out = summary_header();
    for p in &grid.parameters {
        write!(out, ",{p}").expect("write to string");
    }
    out.push('\n');
    for (cell, s) in grid.cells.iter().zip(summaries) {
        out.push_str(&summary_row(s));
        for (_, v) in &cell.assignment {
            let text = value_text(v);
            if text.contains([',', '"', '\n']) {
                write!(out, ",\"{}\"", text.replace('"', "\"\"")).expect("write to string");
            } else {
                write!(out, ",{text}").expect("write to string");
            }
        }
        out.push('\n');
    }
    out
}

/// Runs every cell in order, writing each cell's trace and summary files,
/// then `<id>_sweep.csv`. A manifest `<id>_sweep_manifest.txt` lists the
/// files written; if a cell fails it also records the failure and the
/// error is returned.
pub fn run_sweep(grid: &SweepGrid, base: &Path, exec: Execution) -> Result<SweepOutcome> {
    let dir = base.join(&grid.output_dir);
    fs::create_dir_all(&dir)?;
    let manifest = dir.join(format!("{}_sweep_manifest.txt", grid.id));
    let mut lines = vec![format!("sweep = {}", grid.id), format!("cells = {}", grid.cells.len())];
    let mut summaries = Vec::new();
    for (i, cell) in grid.cells.iter().enumerate() {
        let result = (|| -> Result<(Summary, OutputFiles)> {
            let prep = Prepared::new(cell.config.clone(), base)?;
            let traces = run_experiment(&prep, exec)?;
            let summary = summarize(&prep, &traces);
            let files = write_outputs(&prep.output_dir(base), &prep, &traces, &summary)?;
            Ok((summary, files))
        })();
        match result {
            Ok((summary, files)) => {
                info!("sweep {} cell {}/{} done", grid.id, i + 1, grid.cells.len());
                lines.push(format!(
                    "cell {} ok {} {} {}",
                    i + 1,
                    files.trace.display(),
                    files.meta.display(),
                    files.summary.display()
                ));
                summaries.push(summary);
            }
            Err(e) => {
                lines.push(format!("cell {} failed: {e}", i + 1));
                lines.push("status = aborted".into());
                fs::write(&manifest, lines.join("\n") + "\n")?;
                return Err(Error::Config(format!(
                    "sweep {} aborted at cell {}: {e} (manifest: {})",
                    grid.id,
                    i + 1,
                    manifest.display()
                )));
            }
        }
    }
    let combined = dir.join(format!("{}_sweep.csv", grid.id));
    fs::write(&combined, combined_csv(grid, &summaries))?;
    lines.push(format!("combined {}", combined.display()));
    lines.push("status = complete".into());
    fs::write(&manifest, lines.join("\n") + "\n")?;
    Ok(SweepOutcome { summaries, combined, manifest })
}
