//! CSV emission and parsing for the experiment outputs.
//!
//! All floats are written with 17 significant digits so a re-read
//! round-trips bit-faithfully, and all writers are deterministic functions
//! of their inputs: identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .with_context(|| format!("bad float field {field:?}"))
}

/// One parsed trajectory row: replicate index, time, state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub replicate: usize,
    pub t: f64,
    pub state: Vec<f64>,
}

/// Render per-replicate trajectories as `replicate,t,dim0,...` rows.
pub fn trajectories_csv(rows: &[TrajectoryRow], dimension: usize) -> String {
    let mut out = String::from("replicate,t");
    for d in 0..dimension {
        let _ = write!(out, ",dim{d}");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{}", row.replicate, fmt_float(row.t));
        for v in &row.state {
            let _ = write!(out, ",{}", fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_trajectories_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let replicate = fields
            .next()
            .context("missing replicate field")?
            .parse::<usize>()
            .with_context(|| format!("bad replicate on line {}", i + 1))?;
        let t = parse_float(fields.next().context("missing time field")?)?;
        let state = fields.map(parse_float).collect::<Result<Vec<f64>>>()?;
        rows.push(TrajectoryRow { replicate, t, state });
    }
    Ok(rows)
}

/// Render the per-time ensemble summary as `t,mean_dim0,sd_dim0,...` rows.
pub fn summary_csv(times: &[f64], mean: &[Vec<f64>], sd: &[Vec<f64>]) -> String {
    let dimension = mean.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for d in 0..dimension {
        let _ = write!(out, ",mean_dim{d},sd_dim{d}");
    }
    out.push('\n');
    for (i, t) in times.iter().enumerate() {
        let _ = write!(out, "{}", fmt_float(*t));
        for d in 0..dimension {
            let _ = write!(out, ",{},{}", fmt_float(mean[i][d]), fmt_float(sd[i][d]));
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub t: f64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let fields = line.split(',').map(parse_float).collect::<Result<Vec<_>>>()?;
        let t = fields[0];
        let mut mean = Vec::new();
        let mut sd = Vec::new();
        for pair in fields[1..].chunks(2) {
            mean.push(pair[0]);
            sd.push(pair[1]);
        }
        rows.push(SummaryRow { t, mean, sd });
    }
    Ok(rows)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating directory {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
