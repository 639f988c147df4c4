//! Experiment driver: configs, runs, traces and their CSV/SVG artifacts.

mod compare;
mod config;
mod output;
mod run;
mod trace;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use compare::{compare_runs, default_target, Comparison, RoundsToTarget, PLATEAU_FRACTION};
pub use config::{ExperimentConfig, OptimizerKind, ProblemConfig, ProxyChoice};
pub use output::{emit_csv, emit_plot, render_svg};
pub use run::{
    estimate_dissimilarity, prepare_experiment, run_experiment, ExperimentRun, PreparedExperiment, REFERENCE_MAX_ITER,
    REFERENCE_TOL,
};
pub use trace::{RunTrace, TraceRow, CSV_HEADER};

/// Result of one config in a sweep.
#[derive(Debug)]
pub struct SweepItem {
    pub config: PathBuf,
    pub output: PathBuf,
    pub result: Result<ExperimentRun>,
}

/// Runs every `*.json` config in `dir` in parallel. Each run writes its
/// trace to the config's `output`, or next to the config as `<stem>.csv`.
pub fn sweep<S: AsRef<str> + Sync>(dir: impl AsRef<Path>, overrides: &[S]) -> Result<Vec<SweepItem>> {
    let dir = dir.as_ref();
    let mut configs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    configs.sort();
    Ok(configs
        .into_par_iter()
        .map(|path| {
            let default_output = path.with_extension("csv");
            let loaded = ExperimentConfig::load(&path).and_then(|c| c.with_overrides(overrides));
            let output = loaded
                .as_ref()
                .ok()
                .and_then(|c| c.output.clone())
                .unwrap_or(default_output);
            let result = loaded.and_then(|config| {
                let run = run_experiment(&config)?;
                emit_csv(run.trace(), &output)?;
                Ok(run)
            });
            SweepItem {
                config: path,
                output,
                result,
            }
        })
        .collect())
}
