//! Experiment orchestration: build the process and model once, fan the
//! requested checks out across the worker pool, assemble the report
//! sequentially, and enforce the wall-clock guard between checks.

use std::time::Instant;

use rayon::prelude::*;

use crate::checks::{run_check, CheckRecord};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::ReportDocument;

pub fn run_experiment(config: &ExperimentConfig) -> CliResult<ReportDocument> {
    config.validate()?;
    let process = config.build_process()?;
    let model = config.build_model(&process)?;
    let start = Instant::now();
    let limit_secs = config.budgets.wall_clock_secs;

    // Checks are independent; the pool bound comes from the global rayon
    // configuration (`--parallel`). The guard is polled as each check is
    // about to start, so one slow check cannot drag an experiment past the
    // budget unnoticed by the ones queued behind it.
    let results: Vec<(CheckRecord, f64)> = config
        .checks
        .par_iter()
        .map(|spec| -> CliResult<(CheckRecord, f64)> {
            if start.elapsed().as_secs_f64() > limit_secs as f64 {
                return Err(CliError::BudgetExceeded { limit_secs });
            }
            let check_start = Instant::now();
            let record = run_check(config, spec, &model, &process)?;
            Ok((record, check_start.elapsed().as_secs_f64()))
        })
        .collect::<CliResult<_>>()?;
    if start.elapsed().as_secs_f64() > limit_secs as f64 {
        return Err(CliError::BudgetExceeded { limit_secs });
    }

    let mut records = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    for (i, (record, seconds)) in results.into_iter().enumerate() {
        timings.push((format!("{}#{}", record.check, i), seconds));
        records.push(record);
    }
    ReportDocument::new(config, records, timings)
}

/// Parses, validates and runs a config document.
pub fn run_from_toml(text: &str) -> CliResult<ReportDocument> {
    let config = ExperimentConfig::from_toml(text)?;
    run_experiment(&config)
}
