//! Monte Carlo ensemble runner: independent seeded realisations dispatched
//! to a worker pool, with per-time summary statistics and the divergence
//! statistic used by the chaotic-system study.

use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::Result;
use gpadams::{solve, Error as SolverError, Scheme, SolverConfig, Trajectory};
use rayon::prelude::*;

use crate::csvio::{self, TrajectoryRow};
use crate::models::ModelSpec;

#[derive(Clone, Debug)]
pub struct EnsembleParams {
    pub steps: usize,
    pub h: f64,
    pub n: usize,
    pub seed: u64,
    pub t0: f64,
    pub t_end: f64,
    pub probabilistic: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplicateStatus {
    Completed,
    Diverged { step_index: usize },
}

#[derive(Clone, Debug)]
pub struct Replicate {
    pub index: usize,
    pub status: ReplicateStatus,
    /// Full trajectory, or the partial one up to divergence.
    pub trajectory: Trajectory,
}

/// Everything one ensemble run produced. Wall-clock timings are kept out of
/// the CSV outputs so identical runs stay byte-identical.
#[derive(Clone, Debug)]
pub struct EnsembleRecord {
    pub model: String,
    pub params: EnsembleParams,
    pub replicates: Vec<Replicate>,
    pub wall_clock: Vec<Duration>,
    pub times: Vec<f64>,
    /// Per-time mean over the replicates still alive at that time.
    pub mean: Vec<Vec<f64>>,
    /// Per-time sample standard deviation (zero when fewer than two alive).
    pub sd: Vec<Vec<f64>>,
}

/// Run `n` independent realisations. Each replicate owns RNG stream
/// `replicate_index` of the base seed, so the outcome does not depend on the
/// worker count or scheduling. Diverged replicates keep their partial
/// trajectory and are flagged; the run continues.
pub fn run_ensemble(spec: &ModelSpec, params: &EnsembleParams) -> Result<EnsembleRecord> {
    let base = SolverConfig {
        probabilistic: params.probabilistic,
        seed: params.seed,
        ..SolverConfig::new(
            Scheme::Ab,
            params.steps,
            params.h,
            params.t0,
            params.t_end,
            spec.default_y0.clone(),
        )
    };
    base.validate(spec.system.dimension())
        .map_err(anyhow::Error::from)?;

    let outcomes: Vec<(Replicate, Duration)> = (0..params.n)
        .into_par_iter()
        .map(|index| {
            let mut config = base.clone();
            config.stream = index as u64;
            let start = Instant::now();
            let outcome = match solve(spec.system.as_ref(), &config) {
                Ok(trajectory) => Replicate {
                    index,
                    status: ReplicateStatus::Completed,
                    trajectory,
                },
                Err(SolverError::Divergence {
                    step_index,
                    partial,
                }) => Replicate {
                    index,
                    status: ReplicateStatus::Diverged { step_index },
                    trajectory: *partial,
                },
                Err(other) => panic!("unexpected solver failure: {other}"),
            };
            (outcome, start.elapsed())
        })
        .collect();

    let mut replicates = Vec::with_capacity(params.n);
    let mut wall_clock = Vec::with_capacity(params.n);
    for (replicate, elapsed) in outcomes {
        replicates.push(replicate);
        wall_clock.push(elapsed);
    }
    replicates.sort_by_key(|r| r.index);

    let n_points = base.n_steps().map_err(anyhow::Error::from)? + 1;
    let times: Vec<f64> = (0..n_points)
        .map(|k| params.t0 + k as f64 * params.h)
        .collect();
    let (mean, sd) = summarize(&replicates, n_points, spec.system.dimension());

    Ok(EnsembleRecord {
        model: spec.name.to_string(),
        params: params.clone(),
        replicates,
        wall_clock,
        times,
        mean,
        sd,
    })
}

/// Mean and sample standard deviation per time point across the replicates
/// whose trajectories reach it.
pub fn summarize(
    replicates: &[Replicate],
    n_points: usize,
    dimension: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut mean = vec![vec![0.0; dimension]; n_points];
    let mut sd = vec![vec![0.0; dimension]; n_points];
    for i in 0..n_points {
        let alive: Vec<&[f64]> = replicates
            .iter()
            .filter(|r| r.trajectory.states.len() > i)
            .map(|r| r.trajectory.states[i].as_slice())
            .collect();
        if alive.is_empty() {
            continue;
        }
        let n = alive.len() as f64;
        for d in 0..dimension {
            let m = alive.iter().map(|s| s[d]).sum::<f64>() / n;
            mean[i][d] = m;
            if alive.len() >= 2 {
                let ss = alive.iter().map(|s| (s[d] - m).powi(2)).sum::<f64>();
                sd[i][d] = (ss / (n - 1.0)).sqrt();
            }
        }
    }
    (mean, sd)
}

/// First time at which the ensemble spread of the leading component exceeds
/// `threshold_frac` of the reference amplitude; the end time if it never
/// does (a censored value, still usable for ordering).
pub fn divergence_time(record: &EnsembleRecord, amplitude: f64, threshold_frac: f64) -> f64 {
    let threshold = threshold_frac * amplitude;
    for (t, sd) in record.times.iter().zip(&record.sd) {
        if sd[0] > threshold {
            return *t;
        }
    }
    record.params.t_end
}

/// Half the peak-to-peak range of the leading component of a reference
/// trajectory; the scale against which ensemble spread is judged.
pub fn amplitude_of(trajectory: &Trajectory) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for state in &trajectory.states {
        lo = lo.min(state[0]);
        hi = hi.max(state[0]);
    }
    0.5 * (hi - lo)
}

impl EnsembleRecord {
    pub fn trajectory_rows(&self) -> Vec<TrajectoryRow> {
        let mut rows = Vec::new();
        for replicate in &self.replicates {
            for (t, state) in replicate
                .trajectory
                .times
                .iter()
                .zip(&replicate.trajectory.states)
            {
                rows.push(TrajectoryRow {
                    replicate: replicate.index,
                    t: *t,
                    state: state.clone(),
                });
            }
        }
        rows
    }

    pub fn replicates_csv(&self) -> String {
        let mut out = String::from("replicate,seed,stream,status,points\n");
        for r in &self.replicates {
            let status = match r.status {
                ReplicateStatus::Completed => "ok".to_string(),
                ReplicateStatus::Diverged { step_index } => format!("diverged@{step_index}"),
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.index,
                r.trajectory.seed,
                r.trajectory.stream,
                status,
                r.trajectory.times.len()
            ));
        }
        out
    }

    /// Write `trajectories.csv`, `summary.csv` and `replicates.csv`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        let dimension = self
            .replicates
            .first()
            .map_or(0, |r| r.trajectory.dimension());
        csvio::write_file(
            &dir.join("trajectories.csv"),
            &csvio::trajectories_csv(&self.trajectory_rows(), dimension),
        )?;
        csvio::write_file(
            &dir.join("summary.csv"),
            &csvio::summary_csv(&self.times, &self.mean, &self.sd),
        )?;
        csvio::write_file(&dir.join("replicates.csv"), &self.replicates_csv())?;
        Ok(())
    }
}
