//! Benchmark harness for the `ralsfa` sparse Fourier library.
//!
//! An [`ExperimentSpec`] describes a grid of cells (length, sparsity, noise)
//! and a number of seeded runs per cell. [`run_experiment`] executes them and
//! returns per-run records plus per-cell summaries, and [`checks`] evaluates
//! the expected shape of each experiment family.

pub mod checks;
pub mod experiment;
pub mod stats;

pub use checks::{check, Check};
pub use experiment::{
    run_experiment, run_experiment_with, Cell, CellRow, CellSummary, ExperimentResult,
    ExperimentSpec, Family, RunRecord, TimingMode,
};
