//! Adams-Bashforth and Adams-Moulton integrators derived from a Gaussian
//! process prior over the solution and its derivative window.
//!
//! The crate has two halves. The derivation half is exact: [`polybasis`]
//! builds Lagrange basis vectors over the rationals, [`gpcond`] assembles
//! the joint prior covariance and conditions it symbolically (reproducing
//! the classical step coefficients as the conditional mean and the local
//! truncation error as the conditional standard deviation), and [`coeffs`]
//! generates the same tables by direct integration so the two routes
//! cross-validate. The runtime half, [`solver`], steps arbitrary ODE
//! systems in floating point, optionally perturbing each step with Gaussian
//! noise at exactly the derived truncation-error scale, with the scale's
//! unknown derivative factor estimated per step by backward differences.

pub mod coeffs;
pub mod error;
pub mod gpcond;
pub mod polybasis;
pub mod solver;

pub use error::{Error, Result};
pub use gpcond::{build_prior, condition, derive_law, verify_propositions, ConditionalLaw};
pub use polybasis::{build_basis, integrate_01, lagrange_basis, rat, BasisSet, Family, Polynomial, Rational};
pub use solver::{
    estimate_alpha, rk_init, solve, step_ab, step_am_pc, AlphaMode, CountingOde, OdeSystem,
    Scheme, SolverConfig, StepLaw, StepperState, Trajectory,
};
