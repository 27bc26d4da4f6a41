//! Plain-text matrix files.
//!
//! ```text
//! # comment
//! 2 3
//! 0.5 0.5 0
//! 0   0.5 0.5
//! ```
//!
//! The first non-comment line gives the row and column counts; each
//! following line holds one row of whitespace-separated decimals. `#` starts
//! a comment anywhere on a line. Writers emit 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing dimension header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line: header_line,
            msg: format!("bad dimension header: {e}"),
        })?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse {
            line: header_line,
            msg: "header must be `ROWS COLS`".into(),
        });
    };

    let mut out = Vec::with_capacity(rows);
    for (line, body) in lines {
        let row: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
        if row.len() != cols {
            return Err(Error::Parse {
                line,
                msg: format!("expected {cols} columns, found {}", row.len()),
            });
        }
        out.push(row);
    }
    if out.len() != rows {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {rows} rows, found {}", out.len()),
        });
    }
    Ok(out)
}

pub fn format_matrix<R: AsRef<[f64]>>(rows: &[R]) -> String {
    let cols = rows.first().map_or(0, |r| r.as_ref().len());
    let mut out = format!("{} {}\n", rows.len(), cols);
    for row in rows {
        let line: Vec<String> = row.as_ref().iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix<R: AsRef<[f64]>>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    fs::write(path, format_matrix(rows))?;
    Ok(())
}
