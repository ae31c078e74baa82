//! Model registry: the systems the experiment harness knows how to run,
//! each with a default initial condition and a ground-truth mechanism.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use gpadams::{solve, OdeSystem, Scheme, SolverConfig, Trajectory};

/// Exponential decay `y' = -y`; the closed form pins errors exactly.
pub struct LinearTest;

impl OdeSystem for LinearTest {
    fn dimension(&self) -> usize {
        1
    }
    fn rhs(&self, y: &[f64], _t: f64, dydt: &mut [f64]) {
        dydt[0] = -y[0];
    }
    fn name(&self) -> &str {
        "linear_test"
    }
}

/// Periodic predator-prey model `x' = a x - b x y`, `y' = g x y - d y`.
pub struct LotkaVolterra {
    pub a: f64,
    pub b: f64,
    pub g: f64,
    pub d: f64,
}

impl Default for LotkaVolterra {
    fn default() -> Self {
        LotkaVolterra {
            a: 1.0,
            b: 0.3,
            g: 1.0,
            d: 0.7,
        }
    }
}

impl OdeSystem for LotkaVolterra {
    fn dimension(&self) -> usize {
        2
    }
    fn rhs(&self, y: &[f64], _t: f64, dydt: &mut [f64]) {
        dydt[0] = self.a * y[0] - self.b * y[0] * y[1];
        dydt[1] = self.g * y[0] * y[1] - self.d * y[1];
    }
    fn name(&self) -> &str {
        "lotka_volterra"
    }
}

/// Cubic Chua circuit, the "Attractor CE96" parameter set:
/// `x' = a (y - (1 + c1) x - c3 x^3)`, `y' = x - y + z`, `z' = -b y - g z`.
pub struct Chua {
    pub a: f64,
    pub b: f64,
    pub g: f64,
    pub c1: f64,
    pub c3: f64,
}

impl Default for Chua {
    fn default() -> Self {
        Chua {
            a: -1.4157,
            b: 0.02944201,
            g: 0.322673579,
            c1: -0.0197557699,
            c3: -0.0609273571,
        }
    }
}

impl OdeSystem for Chua {
    fn dimension(&self) -> usize {
        3
    }
    fn rhs(&self, y: &[f64], _t: f64, dydt: &mut [f64]) {
        let (x, yy, z) = (y[0], y[1], y[2]);
        dydt[0] = self.a * (yy - (1.0 + self.c1) * x - self.c3 * x * x * x);
        dydt[1] = x - yy + z;
        dydt[2] = -self.b * yy - self.g * z;
    }
    fn name(&self) -> &str {
        "chua"
    }
}

/// How ground truth is obtained for a model.
#[derive(Clone, Copy)]
pub enum Reference {
    /// Exact solution as a function of elapsed time and initial state.
    Closed(fn(f64, &[f64]) -> Vec<f64>),
    /// Deterministic predictor-corrector solve at `h = h_min / divisor`.
    Refined { divisor: f64 },
}

/// Registry entry.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: &'static str,
    pub system: Arc<dyn OdeSystem>,
    pub default_y0: Vec<f64>,
    pub reference: Reference,
}

fn decay_closed_form(elapsed: f64, y0: &[f64]) -> Vec<f64> {
    y0.iter().map(|y| y * (-elapsed).exp()).collect()
}

/// All registered models. Extend by appending an entry here.
pub fn registry() -> Vec<ModelSpec> {
    vec![
        ModelSpec {
            name: "linear_test",
            system: Arc::new(LinearTest),
            default_y0: vec![1.0],
            reference: Reference::Closed(decay_closed_form),
        },
        ModelSpec {
            name: "lotka_volterra",
            system: Arc::new(LotkaVolterra::default()),
            default_y0: vec![1.0, 1.0],
            reference: Reference::Refined { divisor: 50.0 },
        },
        ModelSpec {
            name: "chua",
            system: Arc::new(Chua::default()),
            default_y0: vec![0.0, 0.003, 0.005],
            reference: Reference::Refined { divisor: 50.0 },
        },
    ]
}

pub fn lookup(name: &str) -> Result<ModelSpec> {
    registry()
        .into_iter()
        .find(|m| m.name == name)
        .with_context(|| {
            let names: Vec<_> = registry().iter().map(|m| m.name).collect();
            format!("unknown model {name:?}; registered models: {names:?}")
        })
}

/// Ground truth sampled (or evaluated) on demand.
pub enum GroundTruth {
    Closed {
        f: fn(f64, &[f64]) -> Vec<f64>,
        t0: f64,
        y0: Vec<f64>,
    },
    Sampled(Trajectory),
}

impl GroundTruth {
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        match self {
            GroundTruth::Closed { f, t0, y0 } => f(t - t0, y0),
            GroundTruth::Sampled(traj) => {
                let idx = traj.index_at(t);
                assert!(
                    (traj.times[idx] - t).abs() <= traj.config.h,
                    "time {t} is outside the reference grid"
                );
                traj.states[idx].clone()
            }
        }
    }
}

/// Deterministic high-order reference solve used both for sampled ground
/// truth and for floor estimation.
pub fn reference_trajectory(
    spec: &ModelSpec,
    t0: f64,
    t_end: f64,
    h_ref: f64,
) -> Result<Trajectory> {
    let config = SolverConfig::new(
        Scheme::AmPc,
        3,
        h_ref,
        t0,
        t_end,
        spec.default_y0.clone(),
    );
    solve(spec.system.as_ref(), &config).map_err(anyhow::Error::from)
}

/// Resolve the model's ground truth over `[t0, t_end]` given the finest
/// study step size.
pub fn ground_truth(spec: &ModelSpec, t0: f64, t_end: f64, h_min: f64) -> Result<GroundTruth> {
    match spec.reference {
        Reference::Closed(f) => Ok(GroundTruth::Closed {
            f,
            t0,
            y0: spec.default_y0.clone(),
        }),
        Reference::Refined { divisor } => {
            if !(divisor > 1.0) {
                bail!("reference divisor must exceed 1, got {divisor}");
            }
            let traj = reference_trajectory(spec, t0, t_end, h_min / divisor)?;
            Ok(GroundTruth::Sampled(traj))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<_> = registry().iter().map(|m| m.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), registry().len());
    }

    #[test]
    fn lookup_reports_known_models() {
        assert!(lookup("chua").is_ok());
        let err = lookup("lorenz").err().unwrap().to_string();
        assert!(err.contains("lotka_volterra"), "{err}");
    }

    #[test]
    fn closed_form_matches_decay() {
        let spec = lookup("linear_test").unwrap();
        let truth = ground_truth(&spec, 0.0, 5.0, 0.1).unwrap();
        let y = truth.state_at(2.0);
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sampled_reference_tracks_closed_form() {
        // run the refined reference machinery on the model whose answer we
        // know in closed form
        let mut spec = lookup("linear_test").unwrap();
        spec.reference = Reference::Refined { divisor: 50.0 };
        let truth = ground_truth(&spec, 0.0, 3.0, 0.05).unwrap();
        let y = truth.state_at(3.0);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-12, "{}", y[0]);
    }
}
