//! Experiment runner behind the `dualiscope` binary.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::suite::{run_part, PartOutcome, Preset};

pub use config::{Experiment, ExperimentConfig, GraphSpec};
pub use experiments::run_experiment;
pub use output::{write_outputs, Outcome, Report, Table, REPORT_SCHEMA, REPORT_VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Also print `report.json` to stdout.
    pub dump: bool,
}

/// `--jobs`, else `DUALISCOPE_JOBS`, else all cores.
pub fn resolve_jobs(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(j) = flag {
        return if j == 0 {
            Err(Error::InvalidConfig("--jobs must be >= 1".into()))
        } else {
            Ok(Some(j))
        };
    }
    match std::env::var("DUALISCOPE_JOBS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(j) if j > 0 => Ok(Some(j)),
            _ => Err(Error::InvalidConfig(format!(
                "DUALISCOPE_JOBS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?;
    Ok(pool.install(f))
}

fn out_dir(options: &RunOptions, config_out: Option<&Path>) -> PathBuf {
    options
        .out
        .clone()
        .or_else(|| config_out.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("dualiscope-out"))
}

/// Loads, runs and writes one experiment; returns the written report.
pub fn run_config_file(path: &Path, options: &RunOptions) -> Result<Report> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if options.seed.is_some() {
        config.seed = options.seed;
    }
    run_config(&config, options)
}

/// Runs one experiment without touching the filesystem.
pub fn evaluate_config(config: &ExperimentConfig, jobs: Option<usize>) -> Result<(Report, Table)> {
    config.validate()?;
    let outcome = with_pool(jobs, || run_experiment(config))??;
    let report = Report::new(config.experiment.name(), config.seed, &outcome);
    Ok((report, outcome.table))
}

pub fn run_config(config: &ExperimentConfig, options: &RunOptions) -> Result<Report> {
    let (report, table) = evaluate_config(config, resolve_jobs(options.jobs)?)?;
    let dir = out_dir(options, config.output.as_deref());
    write_outputs(&dir, &report, &table)?;
    if options.dump {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?
        );
    }
    Ok(report)
}

/// Runs a preset of the verification battery without touching the filesystem.
pub fn evaluate_suite(preset: &str, jobs: Option<usize>) -> Result<(Report, Table)> {
    let preset = Preset::parse(preset)?;
    let parts = preset.parts();
    let outcomes: Vec<PartOutcome> = with_pool(jobs, || {
        parts
            .par_iter()
            .map(|&(c, p)| run_part(c, p))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut table = Table::new(&["criterion", "part", "title", "passed", "cases", "detail"]);
    for o in &outcomes {
        table.push(vec![
            o.criterion.to_string(),
            serde_json::to_value(o.part)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            o.title.clone(),
            o.passed.to_string(),
            o.cases.to_string(),
            o.detail.clone(),
        ]);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let worst = outcomes
        .iter()
        .find(|o| !o.passed)
        .map(|o| format!("criterion {} ({:?}): {}", o.criterion, o.part, o.detail));
    let outcome = Outcome {
        passed,
        worst_case: worst,
        summary: json!({ "parts": outcomes }),
        table,
    };
    let name = format!(
        "suite:{}",
        serde_json::to_value(preset)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    );
    let report = Report::new(&name, Some(crate::suite::SEED), &outcome);
    Ok((report, outcome.table))
}

/// Runs a preset of the verification battery and writes its outputs.
pub fn run_suite(preset: &str, options: &RunOptions) -> Result<Report> {
    let (report, table) = evaluate_suite(preset, resolve_jobs(options.jobs)?)?;
    write_outputs(&out_dir(options, None), &report, &table)?;
    if options.dump {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?
        );
    }
    Ok(report)
}

/// Exit status for an error: everything that stops a run before a verdict is 2.
pub fn exit_code(result: &Result<Report>) -> i32 {
    match result {
        Ok(r) if r.passed => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(_) => EXIT_ERROR,
    }
}
