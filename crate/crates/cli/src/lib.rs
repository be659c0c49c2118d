//! Command-line driver for the `fbchemo` solver.
//!
//! [`run`] reads a config, executes one mode and writes its artifacts into
//! the output directory:
//!
//! | file | modes |
//! |---|---|
//! | `summary.json` | all |
//! | `timeseries.csv` | simulate, ode, oracle |
//! | `h_overlay.csv` | simulate, ode, picard |
//! | `profiles.csv` | simulate with snapshots |
//! | `picard.csv` | picard |
//! | `convergence.csv` | converge |
//! | `sweep.csv`, `points/` | sweep |
//! | `run.log` | all (timestamps only) |

pub mod config;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};

use clap::Parser;
use fbchemo::TimeStep;
use rayon::prelude::*;
use thiserror::Error;

pub use config::{ConfigError, Mode, Overrides, RunConfig, Settings};
pub use output::Summary;

/// Environment variable capping the number of sweep workers.
pub const THREADS_ENV: &str = "FBCHEMO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fbchemo", version, about = "Free-boundary chemotaxis solver")]
pub struct Cli {
    /// TOML config, or a summary.json from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Time step, or `auto`.
    #[arg(long, value_name = "X|auto", value_parser = parse_dt)]
    pub dt: Option<TimeStep>,
    #[arg(long)]
    pub renormalize_mass: bool,
    /// Comma-separated snapshot times for radial profiles.
    #[arg(long, value_name = "t1,t2,...", value_delimiter = ',', value_parser = parse_time)]
    pub snapshots: Option<Vec<f64>>,
}

fn parse_dt(text: &str) -> Result<TimeStep, String> {
    if text.eq_ignore_ascii_case("auto") {
        Ok(TimeStep::Auto)
    } else {
        config::parse_number(text).map(TimeStep::Fixed)
    }
}

fn parse_time(text: &str) -> Result<f64, String> {
    config::parse_number(text)
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode,
            grid: self.grid,
            dt: self.dt,
            renormalize_mass: self.renormalize_mass,
            snapshots: self.snapshots.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solver(fbchemo::Error),
    #[error("{failed} of {total} sweep points failed")]
    SweepPoints { failed: usize, total: usize },
}

impl CliError {
    /// 1 for configuration and I/O problems, 2 for solver failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Solver(_) | CliError::SweepPoints { .. } => 2,
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn threads() -> Result<usize, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(ConfigError::Invalid(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Loads the config, runs the selected mode and writes all artifacts to `out`.
/// Returns the summary of single runs; sweeps return `None`.
pub fn run(
    config_path: &Path,
    out: &Path,
    overrides: &Overrides,
) -> Result<Option<Summary>, CliError> {
    let config = config::load(config_path, overrides)?;
    std::fs::create_dir_all(out).map_err(io_at(out))?;
    let mode = config.settings.mode;
    output::log(
        out,
        &format!("start mode={mode} config={}", config_path.display()),
    )
    .map_err(io_at(out))?;
    let result = match mode {
        Mode::Sweep => sweep(&config, out).map(|()| None),
        _ => single(&config, out).map(Some),
    };
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("exit={} {e}", e.exit_code()),
    };
    output::log(out, &format!("finish mode={mode} {status}")).map_err(io_at(out))?;
    result
}

fn single(config: &RunConfig, out: &Path) -> Result<Summary, CliError> {
    let summary_path = out.join(output::SUMMARY);
    let artifacts = match run::execute(config) {
        Ok(a) => a,
        Err(failed) => {
            output::write_summary(&summary_path, &failed.summary).map_err(io_at(&summary_path))?;
            return Err(CliError::Solver(failed.error));
        }
    };
    let mode = config.settings.mode;
    let write = |name: &str, f: &dyn Fn(&Path) -> std::io::Result<()>| {
        let path = out.join(name);
        f(&path).map_err(io_at(&path))
    };
    if matches!(mode, Mode::Simulate | Mode::Ode | Mode::Oracle) {
        write(output::TIMESERIES, &|p| {
            output::write_timeseries(p, &artifacts.records)
        })?;
    }
    if matches!(mode, Mode::Simulate | Mode::Ode | Mode::Picard) {
        write(output::OVERLAY, &|p| {
            output::write_overlay(p, &artifacts.overlay)
        })?;
    }
    if let Some(run) = artifacts.run.as_ref().filter(|r| !r.snapshots.is_empty()) {
        write(output::PROFILES, &|p| {
            output::write_profiles(p, &run.snapshots)
        })?;
    }
    if let Some(picard) = &artifacts.picard {
        write(output::PICARD, &|p| {
            output::write_picard(p, &picard.increments, &picard.contraction_factors)
        })?;
    }
    if let Some(table) = &artifacts.convergence {
        write(output::CONVERGENCE, &|p| {
            output::write_convergence(p, table)
        })?;
    }
    write(output::SUMMARY, &|p| {
        output::write_summary(p, &artifacts.summary)
    })?;
    Ok(artifacts.summary)
}

fn sweep(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let points = run::sweep_points(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads()?)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("cannot start sweep workers: {e}")))?;
    let rows: Vec<output::SweepRow> =
        pool.install(|| points.par_iter().map(run::run_point).collect());
    let dir = out.join(output::POINTS);
    std::fs::create_dir_all(&dir).map_err(io_at(&dir))?;
    for (i, row) in rows.iter().enumerate() {
        let path = dir.join(output::point_file(i));
        output::write_summary(&path, &row.summary).map_err(io_at(&path))?;
    }
    let path = out.join(output::SWEEP);
    output::write_sweep(&path, &rows).map_err(io_at(&path))?;
    let failed = rows
        .iter()
        .filter(|r| r.summary.diagnostic.is_some())
        .count();
    if failed > 0 {
        return Err(CliError::SweepPoints {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}
