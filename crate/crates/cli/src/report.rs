//! Convergence tables from experiment CSVs, with fitted log-log slopes.

use std::path::Path;

use fluxlab::analysis::loglog_slope;

use crate::error::{CliError, Result};
use crate::table::{render_grid, SCHEMA};

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub source: String,
    pub x: String,
    pub columns: Vec<String>,
    /// `(x, y values)` per data row; `None` for empty or non-numeric cells.
    pub rows: Vec<(f64, Vec<Option<f64>>)>,
    /// Least-squares slope of `ln |y|` against `ln x` per column.
    pub slopes: Vec<f64>,
}

impl Convergence {
    pub fn slope(&self, column: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == column).map(|i| self.slopes[i])
    }

    pub fn render(&self) -> String {
        let mut header = vec![self.x.clone()];
        header.extend(self.columns.iter().cloned());
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(x, ys)| {
                let mut r = vec![format!("{x}")];
                r.extend(ys.iter().map(|y| y.map_or("-".to_string(), |v| format!("{v:.4e}"))));
                r
            })
            .collect();
        let mut slope_row = vec!["slope".to_string()];
        slope_row.extend(self.slopes.iter().map(|&s| {
            if s.is_nan() {
                "n/a".to_string()
            } else if s.is_infinite() {
                format!("{s}")
            } else {
                format!("{s:.3}")
            }
        }));
        rows.push(slope_row);
        format!("== {} ==\n{}", self.source, render_grid(&header, &rows))
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Build the convergence table for one CSV text.
///
/// `x` defaults to the first column; `columns` defaults to every other
/// column with numeric, non-constant values.
pub fn convergence(source: &str, text: &str, x: Option<&str>, columns: &[String]) -> Result<Convergence> {
    let first = text.lines().next().unwrap_or("");
    if !first.starts_with(&format!("# {SCHEMA}")) {
        return Err(CliError::Report(format!("{source}: missing '# {SCHEMA}' header line")));
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(CliError::Report(format!("{source}: no header row")));
    }
    let records: Vec<Vec<Option<f64>>> = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(parse_cell).collect()))
        .collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Err(CliError::Report(format!("{source}: empty CSV (no data rows)")));
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Report(format!("{source}: missing column {name:?}")))
    };
    let xi = match x {
        Some(name) => find(name)?,
        None => 0,
    };
    let ys: Vec<usize> = if columns.is_empty() {
        (0..header.len())
            .filter(|&i| i != xi)
            .filter(|&i| {
                let vals: Vec<f64> = records.iter().filter_map(|r| r[i]).collect();
                vals.len() == records.len() && vals.iter().any(|v| *v != vals[0])
            })
            .collect()
    } else {
        columns.iter().map(|c| find(c)).collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    for r in &records {
        let xv = r[xi].ok_or_else(|| CliError::Report(format!("{source}: non-numeric {:?} value", header[xi])))?;
        rows.push((xv, ys.iter().map(|&i| r[i]).collect::<Vec<_>>()));
    }
    let slopes = (0..ys.len())
        .map(|j| {
            let (xs, vs): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|(x, y)| y[j].map(|v| (*x, v.abs()))).unzip();
            loglog_slope(&xs, &vs)
        })
        .collect();
    Ok(Convergence {
        source: source.to_string(),
        x: header[xi].clone(),
        columns: ys.iter().map(|&i| header[i].clone()).collect(),
        rows,
        slopes,
    })
}

pub fn convergence_file(path: &Path, x: Option<&str>, columns: &[String]) -> Result<Convergence> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    convergence(&path.display().to_string(), &text, x, columns)
}
