//! Runtime integrator: deterministic and probabilistic explicit stepping,
//! implicit predictor-corrector stepping, Runge-Kutta warm-up and per-step
//! noise-scale estimation for arbitrary-dimension systems.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coeffs;
use crate::error::{Error, Result};
use crate::gpcond::{derive_law, ConditionalLaw};
use crate::polybasis::{Family, AB_MAX_STEPS};

/// Right-hand side of an initial value problem `dy/dt = f(y, t)`.
///
/// Implementations must be deterministic: identical `(y, t)` inputs produce
/// identical outputs. `rhs` writes `f(y, t)` into `dydt`, whose length
/// equals `dimension()`.
pub trait OdeSystem: Send + Sync {
    fn dimension(&self) -> usize;
    fn rhs(&self, y: &[f64], t: f64, dydt: &mut [f64]);
    fn name(&self) -> &str {
        "ode"
    }
}

/// Wrapper that counts right-hand-side evaluations, used to pin down the
/// per-step evaluation cost of each scheme.
pub struct CountingOde<S> {
    inner: S,
    count: AtomicU64,
}

impl<S: OdeSystem> CountingOde<S> {
    pub fn new(inner: S) -> Self {
        CountingOde {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }
}

impl<S: OdeSystem> OdeSystem for CountingOde<S> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn rhs(&self, y: &[f64], t: f64, dydt: &mut [f64]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.rhs(y, t, dydt);
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

/// Stepping scheme: explicit, or explicit predictor with implicit corrector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Ab,
    /// Predictor-corrector: an explicit `steps`-step prediction feeds the
    /// one-order-higher implicit rule. Two derivative evaluations per step.
    AmPc,
}

/// How the noise scale is obtained at each step.
#[derive(Clone, Debug, PartialEq)]
pub enum AlphaMode {
    /// Backward-difference estimate of the relevant derivative of `f` from
    /// the stored window (the default; costs no extra evaluations).
    BackwardDifference,
    /// Fixed per-dimension value.
    Fixed(Vec<f64>),
    /// No noise; makes a probabilistic run coincide with the deterministic one.
    Zero,
}

/// Full description of one integration run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Window size of the explicit rule (also the predictor size for
    /// [`Scheme::AmPc`], whose corrector uses one more value).
    pub steps: usize,
    pub h: f64,
    pub t0: f64,
    pub t_end: f64,
    pub y0: Vec<f64>,
    pub probabilistic: bool,
    pub seed: u64,
    /// Substream selector; ensembles give each replicate its own stream so
    /// results are independent of scheduling.
    pub stream: u64,
    pub alpha_mode: AlphaMode,
}

impl SolverConfig {
    pub fn new(scheme: Scheme, steps: usize, h: f64, t0: f64, t_end: f64, y0: Vec<f64>) -> Self {
        SolverConfig {
            scheme,
            steps,
            h,
            t0,
            t_end,
            y0,
            probabilistic: false,
            seed: 0,
            stream: 0,
            alpha_mode: AlphaMode::BackwardDifference,
        }
    }

    /// Number of grid intervals between `t0` and `t_end`.
    pub fn n_steps(&self) -> Result<usize> {
        let span = self.t_end - self.t0;
        let n = (span / self.h).round();
        if !n.is_finite() || n < 1.0 || n > 1e15 {
            return Err(Error::invalid(format!(
                "cannot step from {} to {} with h={}",
                self.t0, self.t_end, self.h
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::invalid(format!("step size must be positive, got {}", self.h)));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::invalid(format!(
                "need t_end > t0, got [{}, {}]",
                self.t0, self.t_end
            )));
        }
        if self.steps == 0 || self.steps > AB_MAX_STEPS {
            return Err(Error::invalid(format!(
                "supported step counts are 1..={AB_MAX_STEPS}, got {}",
                self.steps
            )));
        }
        if self.y0.len() != dimension {
            return Err(Error::invalid(format!(
                "initial state has dimension {}, system has {}",
                self.y0.len(),
                dimension
            )));
        }
        if let AlphaMode::Fixed(v) = &self.alpha_mode {
            if v.len() != dimension {
                return Err(Error::invalid(format!(
                    "fixed noise scale has dimension {}, system has {}",
                    v.len(),
                    dimension
                )));
            }
        }
        let n = self.n_steps()?;
        if n < self.steps {
            return Err(Error::invalid(format!(
                "integration interval holds {n} steps, warm-up needs {}",
                self.steps
            )));
        }
        Ok(())
    }
}

/// Rolling integration state: the current point plus the derivative window.
///
/// The window keeps the last `steps + 1` evaluations newest first: `steps`
/// of them feed the mean update and the one extra, older value completes the
/// backward-difference stencil for the noise-scale estimate.
#[derive(Clone, Debug)]
pub struct StepperState {
    t0: f64,
    h: f64,
    pub y: Vec<f64>,
    pub step_index: usize,
    f_window: VecDeque<Vec<f64>>,
    scratch: Vec<f64>,
}

impl StepperState {
    /// Current time, computed from the grid so spacing stays exactly uniform.
    pub fn t(&self) -> f64 {
        self.t0 + self.step_index as f64 * self.h
    }

    /// Stored derivative evaluations, newest first.
    pub fn f_window(&self) -> &VecDeque<Vec<f64>> {
        &self.f_window
    }

    /// Evaluate the derivative at the current point and rotate it into the
    /// window, recycling the oldest buffer once at capacity.
    fn advance_window(&mut self, system: &dyn OdeSystem, t: f64, capacity: usize) {
        let mut f = if self.f_window.len() == capacity {
            self.f_window.pop_back().expect("window not empty")
        } else {
            vec![0.0; self.y.len()]
        };
        system.rhs(&self.y, t, &mut f);
        self.f_window.push_front(f);
    }
}

/// Float-precision image of a [`ConditionalLaw`] for the stepping hot path.
#[derive(Clone, Debug)]
pub struct StepLaw {
    pub steps: usize,
    pub weights: Vec<f64>,
    pub sd_constant: f64,
    pub h_exponent: u32,
}

impl StepLaw {
    pub fn new(law: &ConditionalLaw) -> Self {
        StepLaw {
            steps: law.steps,
            weights: law.f_weights_f64(),
            sd_constant: law.sd_constant_f64(),
            h_exponent: law.alpha_exponent,
        }
    }
}

/// A complete realisation: grid times, states, and the per-step injected
/// noise standard deviations (zero through warm-up and in deterministic
/// runs). `sds[k]` is the noise scale used to generate `states[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub sds: Vec<Vec<f64>>,
    pub seed: u64,
    pub stream: u64,
    pub config: SolverConfig,
}

impl Trajectory {
    pub fn dimension(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the grid point closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let idx = ((t - self.config.t0) / self.config.h).round();
        (idx.max(0.0) as usize).min(self.times.len() - 1)
    }
}

/// Substeps of the classical fourth-order Runge-Kutta scheme per grid
/// interval during warm-up. Eight substeps push the warm-up error well
/// below the multistep local error for every supported order and step size
/// exercised by the studies.
pub const RK_SUBSTEPS: usize = 8;

fn rk4_interval(system: &dyn OdeSystem, y: &mut [f64], t_start: f64, h: f64, substeps: usize) {
    let dim = y.len();
    let dt = h / substeps as f64;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut yt = vec![0.0; dim];
    for j in 0..substeps {
        let t = t_start + j as f64 * dt;
        system.rhs(y, t, &mut k1);
        for i in 0..dim {
            yt[i] = y[i] + 0.5 * dt * k1[i];
        }
        system.rhs(&yt, t + 0.5 * dt, &mut k2);
        for i in 0..dim {
            yt[i] = y[i] + 0.5 * dt * k2[i];
        }
        system.rhs(&yt, t + 0.5 * dt, &mut k3);
        for i in 0..dim {
            yt[i] = y[i] + dt * k3[i];
        }
        system.rhs(&yt, t + dt, &mut k4);
        for i in 0..dim {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// Warm-up: advance the initial value across the first `steps` grid
/// intervals with substepped RK4 and fill the derivative window (all
/// `steps + 1` grid values, so the noise-scale stencil is full-order from
/// the very first multistep iteration). Returns the ready state and the
/// warm-up grid states `y_0 ..= y_steps`.
pub fn rk_init(system: &dyn OdeSystem, config: &SolverConfig) -> (StepperState, Vec<Vec<f64>>) {
    let s = config.steps;
    let dim = config.y0.len();
    let mut states = Vec::with_capacity(s + 1);
    states.push(config.y0.clone());
    let mut y = config.y0.clone();
    for k in 1..=s {
        let t_start = config.t0 + (k - 1) as f64 * config.h;
        rk4_interval(system, &mut y, t_start, config.h, RK_SUBSTEPS);
        states.push(y.clone());
    }

    let mut f_window = VecDeque::with_capacity(s + 1);
    for k in (0..=s).rev() {
        let mut f = vec![0.0; dim];
        system.rhs(&states[k], config.t0 + k as f64 * config.h, &mut f);
        f_window.push_back(f);
    }

    let state = StepperState {
        t0: config.t0,
        h: config.h,
        y,
        step_index: s,
        f_window,
        scratch: vec![0.0; dim],
    };
    (state, states)
}

/// Backward-difference estimate of the `s`-th derivative of `f` at the next
/// grid point, per dimension, from the stored window.
///
/// Panics if the window holds fewer than `s + 1` values; that indicates a
/// stepping bug, not a user error.
pub fn estimate_alpha(state: &StepperState, s: usize, h: f64) -> Result<Vec<f64>> {
    let deltas: Vec<f64> = coeffs::bd_coefficients(s)?
        .iter()
        .map(|r| r.to_f64().unwrap())
        .collect();
    let mut alpha = vec![0.0; state.y.len()];
    estimate_alpha_into(&deltas, &state.f_window, h.powi(-(s as i32)), &mut alpha);
    Ok(alpha)
}

fn estimate_alpha_into(
    deltas: &[f64],
    window: &VecDeque<Vec<f64>>,
    inv_h_pow_s: f64,
    alpha: &mut [f64],
) {
    assert!(
        window.len() >= deltas.len(),
        "noise-scale stencil needs {} window values, have {}",
        deltas.len(),
        window.len()
    );
    alpha.fill(0.0);
    for (delta, f) in deltas.iter().zip(window.iter()) {
        for (a, fk) in alpha.iter_mut().zip(f.iter()) {
            *a += delta * fk;
        }
    }
    for a in alpha.iter_mut() {
        *a *= inv_h_pow_s;
    }
}

fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// One explicit step: mean update from the window, optional Gaussian
/// perturbation scaled by `|alpha| * h^(exponent+1) * sd_constant`, then a
/// single derivative evaluation at the new point. Returns the per-dimension
/// noise standard deviations that were applied.
pub fn step_ab(
    system: &dyn OdeSystem,
    state: &mut StepperState,
    law: &StepLaw,
    alpha: &[f64],
    noisy: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let dim = state.y.len();
    let s = law.steps;
    let h = state.h;
    debug_assert!(state.f_window.len() >= s);

    let mut sigmas = vec![0.0; dim];
    let mut y_next = std::mem::take(&mut state.scratch);
    for k in 0..dim {
        let mut acc = 0.0;
        for j in 0..s {
            acc += law.weights[j] * state.f_window[j][k];
        }
        y_next[k] = state.y[k] + h * acc;
    }
    if noisy {
        let scale = law.sd_constant * h.powi(law.h_exponent as i32 + 1);
        for k in 0..dim {
            let sigma = scale * alpha[k].abs();
            sigmas[k] = sigma;
            let z: f64 = StandardNormal.sample(rng);
            y_next[k] += sigma * z;
        }
    }

    state.step_index += 1;
    let t_next = state.t();
    std::mem::swap(&mut state.y, &mut y_next);
    state.scratch = y_next;
    state.advance_window(system, t_next, s + 1);

    if !all_finite(&state.y) || !all_finite(state.f_window.front().unwrap()) {
        return Err(Error::StepDiverged {
            step_index: state.step_index,
        });
    }
    Ok(sigmas)
}

/// One predictor-corrector step: explicit prediction, derivative evaluation
/// at the predicted point, implicit-rule correction (with optional noise at
/// the corrector's scale), then the derivative evaluation at the corrected
/// point. Exactly two evaluations per step; the window advances with the
/// corrected value.
pub fn step_am_pc(
    system: &dyn OdeSystem,
    state: &mut StepperState,
    predictor: &StepLaw,
    corrector: &StepLaw,
    alpha: &[f64],
    noisy: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let dim = state.y.len();
    let s = predictor.steps;
    let h = state.h;
    debug_assert!(state.f_window.len() >= s);
    debug_assert_eq!(corrector.steps, s + 1);

    let t_next = state.t0 + (state.step_index + 1) as f64 * state.h;

    // predictor mean only; noise enters through the corrector
    let mut y_star = std::mem::take(&mut state.scratch);
    for k in 0..dim {
        let mut acc = 0.0;
        for j in 0..s {
            acc += predictor.weights[j] * state.f_window[j][k];
        }
        y_star[k] = state.y[k] + h * acc;
    }
    let mut f_star = vec![0.0; dim];
    system.rhs(&y_star, t_next, &mut f_star);

    let mut sigmas = vec![0.0; dim];
    let mut y_next = y_star;
    for k in 0..dim {
        let mut acc = corrector.weights[0] * f_star[k];
        for j in 0..s {
            acc += corrector.weights[j + 1] * state.f_window[j][k];
        }
        y_next[k] = state.y[k] + h * acc;
    }
    if noisy {
        let scale = corrector.sd_constant * h.powi(corrector.h_exponent as i32 + 1);
        for k in 0..dim {
            let sigma = scale * alpha[k].abs();
            sigmas[k] = sigma;
            let z: f64 = StandardNormal.sample(rng);
            y_next[k] += sigma * z;
        }
    }

    state.step_index += 1;
    std::mem::swap(&mut state.y, &mut y_next);
    state.scratch = y_next;
    state.advance_window(system, t_next, s + 1);

    if !all_finite(&state.y) || !all_finite(state.f_window.front().unwrap()) {
        return Err(Error::StepDiverged {
            step_index: state.step_index,
        });
    }
    Ok(sigmas)
}

/// Integrate the system across the configured interval: RK warm-up, then
/// repeated (optionally probabilistic) multistep iteration. The result is a
/// deterministic function of `(system, config)`, seed and stream included.
///
/// On divergence the error carries the partial trajectory up to the last
/// finite state.
pub fn solve(system: &dyn OdeSystem, config: &SolverConfig) -> Result<Trajectory> {
    let dim = system.dimension();
    config.validate(dim)?;
    let s = config.steps;

    let ab_law = StepLaw::new(&derive_law(Family::Ab, s, true)?);
    let am_law = match config.scheme {
        Scheme::AmPc => Some(StepLaw::new(&derive_law(Family::Am, s + 1, true)?)),
        Scheme::Ab => None,
    };
    let deltas: Vec<f64> = coeffs::bd_coefficients(s)?
        .iter()
        .map(|r| r.to_f64().unwrap())
        .collect();
    let inv_h_pow_s = config.h.powi(-(s as i32));
    let n_steps = config.n_steps()?;

    let (mut state, warm_states) = rk_init(system, config);
    let mut times: Vec<f64> = (0..=s).map(|k| config.t0 + k as f64 * config.h).collect();
    let mut states = warm_states;
    let mut sds = vec![vec![0.0; dim]; s + 1];

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);

    let noisy = config.probabilistic && !matches!(config.alpha_mode, AlphaMode::Zero);
    let mut alpha = vec![0.0; dim];

    for _ in s..n_steps {
        if noisy {
            match &config.alpha_mode {
                AlphaMode::BackwardDifference => {
                    estimate_alpha_into(&deltas, &state.f_window, inv_h_pow_s, &mut alpha);
                }
                AlphaMode::Fixed(v) => alpha.copy_from_slice(v),
                AlphaMode::Zero => unreachable!(),
            }
        }
        let draw = config.probabilistic;
        let stepped = match (&config.scheme, &am_law) {
            (Scheme::Ab, _) => step_ab(system, &mut state, &ab_law, &alpha, draw, &mut rng),
            (Scheme::AmPc, Some(am)) => {
                step_am_pc(system, &mut state, &ab_law, am, &alpha, draw, &mut rng)
            }
            (Scheme::AmPc, None) => unreachable!(),
        };
        match stepped {
            Ok(sigmas) => {
                times.push(state.t());
                states.push(state.y.clone());
                sds.push(sigmas);
            }
            Err(Error::StepDiverged { step_index }) => {
                let partial = Trajectory {
                    times,
                    states,
                    sds,
                    seed: config.seed,
                    stream: config.stream,
                    config: config.clone(),
                };
                return Err(Error::Divergence {
                    step_index,
                    partial: Box::new(partial),
                });
            }
            Err(other) => return Err(other),
        }
    }

    Ok(Trajectory {
        times,
        states,
        sds,
        seed: config.seed,
        stream: config.stream,
        config: config.clone(),
    })
}
