//! Empirical convergence study: per-(steps, h) probe-time errors over a
//! seeded ensemble, log-log slope fits, and floor detection against the
//! reference solution.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use gpadams::{solve, Error as SolverError, Scheme, SolverConfig};
use rayon::prelude::*;

use crate::csvio::{self, fmt_float};
use crate::models::{ground_truth, reference_trajectory, ModelSpec, Reference};

#[derive(Clone, Debug)]
pub struct ConvergenceParams {
    pub steps_list: Vec<usize>,
    pub h_list: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub probe_t: f64,
    pub probabilistic: bool,
}

/// One (steps, h) cell of the study.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub steps: usize,
    pub h: f64,
    pub n_ok: usize,
    pub n_diverged: usize,
    /// Signed probe-time errors of the leading component, one per completed
    /// replicate: computed minus reference.
    pub signed_errors: Vec<f64>,
    pub mean_abs_error: f64,
    /// Mean error is within an order of magnitude of the reference floor,
    /// so the cell cannot resolve the scheme's own error.
    pub floor_limited: bool,
}

#[derive(Clone, Debug)]
pub struct SlopeFit {
    pub steps: usize,
    pub slope: f64,
    pub stderr: f64,
    pub floor_limited: bool,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub model: String,
    pub probe_t: f64,
    pub reference_x: f64,
    /// Estimated accuracy floor of the reference at the probe.
    pub floor: f64,
    pub cells: Vec<CellResult>,
    pub slopes: Vec<SlopeFit>,
}

/// Ordinary least squares fit of `y = a + b x`; returns `(b, stderr_b)`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let stderr = (ss_res / dof / sxx).sqrt();
    (slope, stderr)
}

/// Run the study. Every (steps, h) cell reuses the same seed set (streams
/// `0..n` of the base seed), matching the fixed-seed protocol of the error
/// statistics.
pub fn run_convergence(spec: &ModelSpec, params: &ConvergenceParams) -> Result<ConvergenceReport> {
    if params.h_list.len() < 4 {
        bail!("slope fits need at least 4 step sizes, got {}", params.h_list.len());
    }
    let h_min = params
        .h_list
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(h_min > 0.0) {
        bail!("step sizes must be positive");
    }

    let truth = ground_truth(spec, 0.0, params.probe_t, h_min)?;
    let reference_state = truth.state_at(params.probe_t);
    let reference_x = reference_state[0];
    let floor = estimate_floor(spec, params.probe_t, h_min, reference_x)?;

    let mut cells = Vec::new();
    for &steps in &params.steps_list {
        for &h in &params.h_list {
            let base = SolverConfig {
                probabilistic: params.probabilistic,
                seed: params.seed,
                ..SolverConfig::new(
                    Scheme::Ab,
                    steps,
                    h,
                    0.0,
                    params.probe_t,
                    spec.default_y0.clone(),
                )
            };
            base.validate(spec.system.dimension())
                .map_err(anyhow::Error::from)?;
            let outcomes: Vec<Option<f64>> = (0..params.n)
                .into_par_iter()
                .map(|replicate| {
                    let mut config = base.clone();
                    config.stream = replicate as u64;
                    match solve(spec.system.as_ref(), &config) {
                        Ok(traj) => {
                            let idx = traj.index_at(params.probe_t);
                            Some(traj.states[idx][0] - reference_x)
                        }
                        Err(SolverError::Divergence { .. }) => None,
                        Err(other) => panic!("unexpected solver failure: {other}"),
                    }
                })
                .collect();
            let signed_errors: Vec<f64> = outcomes.iter().flatten().cloned().collect();
            let n_ok = signed_errors.len();
            let n_diverged = params.n - n_ok;
            let mean_abs_error = if n_ok > 0 {
                signed_errors.iter().map(|e| e.abs()).sum::<f64>() / n_ok as f64
            } else {
                f64::NAN
            };
            let floor_limited = mean_abs_error.is_nan() || mean_abs_error < 10.0 * floor;
            cells.push(CellResult {
                steps,
                h,
                n_ok,
                n_diverged,
                signed_errors,
                mean_abs_error,
                floor_limited,
            });
        }
    }

    let mut slopes = Vec::new();
    for &steps in &params.steps_list {
        let usable: Vec<&CellResult> = cells
            .iter()
            .filter(|c| c.steps == steps && c.mean_abs_error.is_finite() && c.mean_abs_error > 0.0)
            .collect();
        let xs: Vec<f64> = usable.iter().map(|c| c.h.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|c| c.mean_abs_error.ln()).collect();
        let (slope, stderr) = if xs.len() >= 2 {
            fit_slope(&xs, &ys)
        } else {
            (f64::NAN, f64::NAN)
        };
        slopes.push(SlopeFit {
            steps,
            slope,
            stderr,
            floor_limited: usable.iter().any(|c| c.floor_limited),
        });
    }

    Ok(ConvergenceReport {
        model: spec.name.to_string(),
        probe_t: params.probe_t,
        reference_x,
        floor,
        cells,
        slopes,
    })
}

/// Accuracy floor of the reference at the probe: for a sampled reference,
/// the probe-value change under one more refinement; for a closed form,
/// plain double-precision roundoff.
fn estimate_floor(spec: &ModelSpec, probe_t: f64, h_min: f64, reference_x: f64) -> Result<f64> {
    let fp_floor = 1e-14 * reference_x.abs().max(1.0);
    match spec.reference {
        Reference::Closed(_) => Ok(fp_floor),
        Reference::Refined { divisor } => {
            let h_ref = h_min / divisor;
            let coarse = reference_trajectory(spec, 0.0, probe_t, h_ref)?;
            let fine = reference_trajectory(spec, 0.0, probe_t, h_ref / 2.0)?;
            let a = coarse.states[coarse.index_at(probe_t)][0];
            let b = fine.states[fine.index_at(probe_t)][0];
            Ok((a - b).abs().max(fp_floor))
        }
    }
}

impl ConvergenceReport {
    pub fn cells_csv(&self) -> String {
        let mut out = String::from("steps,h,n_ok,n_diverged,mean_abs_error,floor_limited\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.steps,
                fmt_float(c.h),
                c.n_ok,
                c.n_diverged,
                fmt_float(c.mean_abs_error),
                c.floor_limited
            );
        }
        out
    }

    pub fn slopes_csv(&self) -> String {
        let mut out = String::from("steps,slope,stderr,floor_limited\n");
        for s in &self.slopes {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.steps,
                fmt_float(s.slope),
                fmt_float(s.stderr),
                s.floor_limited
            );
        }
        out
    }

    pub fn errors_csv(&self) -> String {
        let mut out = String::from("steps,h,replicate,signed_error\n");
        for c in &self.cells {
            for (replicate, e) in c.signed_errors.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    c.steps,
                    fmt_float(c.h),
                    replicate,
                    fmt_float(*e)
                );
            }
        }
        out
    }

    /// Write `convergence.csv`, `slopes.csv` and `errors.csv`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        csvio::write_file(&dir.join("convergence.csv"), &self.cells_csv())?;
        csvio::write_file(&dir.join("slopes.csv"), &self.slopes_csv())?;
        csvio::write_file(&dir.join("errors.csv"), &self.errors_csv())?;
        Ok(())
    }
}
