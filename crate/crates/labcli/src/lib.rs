//! Experiment harness behind the `labcli` binary: model registry, ensemble
//! runner, convergence-study runner and CSV emitters. The binary is a thin
//! argument-parsing layer over these modules so integration tests can drive
//! the same code paths directly.

pub mod converge;
pub mod csvio;
pub mod ensemble;
pub mod models;
