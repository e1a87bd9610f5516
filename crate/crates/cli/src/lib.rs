//! Experiment harness for the `layerfem` solver: TOML configs, single
//! solves, convergence sweeps and mesh/solution dumps.

pub mod classify;
pub mod config;
pub mod dump;
pub mod run;

pub use config::{ExperimentConfig, MeshChoice, ReferenceKind};
pub use run::{run_convergence, solve_single, ConvergenceRecord, ConvergenceTable, NormSet, SolveOutcome};
