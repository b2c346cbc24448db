//! Experiment harness for the `linimed` bandit library.
//!
//! An [`ExperimentSpec`] names an environment, a list of policies, a horizon
//! and a repeat plan. [`run_experiment`] executes every
//! `(policy, α, repeat)` run in parallel with a seed derived from those
//! indices, so results never depend on scheduling. Outputs are aggregated
//! curves, an `α` sweep table, CSV files, a manifest and a PNG plot.

mod aggregate;
pub mod config;
mod error;
mod experiment;
pub mod output;
mod run;
pub mod stats;
mod sweep;
pub mod verify_suite;

pub use aggregate::{aggregate, AggregateCurve};
pub use error::{Error, Result};
pub use experiment::{alpha_grid, synthetic_local_grid, EnvSpec, ExperimentSpec, Metric};
pub use output::{emit_csv, emit_plot, emit_sweep_csv, read_csv, write_manifest};
pub use run::{derive_seed, run_one, run_with, Trajectory};
pub use sweep::{
    run_cell, run_experiment, run_experiment_in, sweep_alpha, with_threads, Best, ExperimentResult, SeedRecord,
    SweepRow, SweepTable,
};

use std::path::Path;

/// Runs `spec` and writes `curves.csv`, `sweep.csv`, `plot.png` and `manifest` into `out`.
pub fn run_to_dir(spec: &ExperimentSpec, out: &Path, threads: Option<usize>) -> Result<ExperimentResult> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let result = run_experiment(spec, threads)?;
    emit_csv(&result.curves, &out.join("curves.csv"))?;
    emit_sweep_csv(&result.table, &out.join("sweep.csv"))?;
    write_manifest(spec, &result, &out.join("manifest"))?;
    emit_plot(&result.curves, spec.metric, &out.join("plot.png"))?;
    Ok(result)
}
