//! Deterministic writers for CSV and JSON artifacts, plus the run log.
//!
//! Floats are written with 17 significant digits (`{:.16e}`); missing values
//! are empty CSV cells and JSON `null`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use fbchemo::diagnostics::ConvergenceTable;
use fbchemo::simulation::Snapshot;
use fbchemo::{Params, RunRecord};
use serde::Serialize;

use crate::config::Settings;

pub const TIMESERIES: &str = "timeseries.csv";
pub const SUMMARY: &str = "summary.json";
pub const OVERLAY: &str = "h_overlay.csv";
pub const PROFILES: &str = "profiles.csv";
pub const PICARD: &str = "picard.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const SWEEP: &str = "sweep.csv";
pub const POINTS: &str = "points";
pub const RUN_LOG: &str = "run.log";

pub const OVERLAY_HEADER: &str = "t,h_simulated,h_analytic";
pub const PROFILES_HEADER: &str = "t,r,u";
pub const PICARD_HEADER: &str = "iteration,increment,contraction_factor";
pub const SWEEP_HEADER: &str =
    "point,n,a,b,mass,critical_mass,regime,event,event_time,oracle_event_time,max_mass_drift,status";

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn write_lines<I>(path: &Path, header: &str, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|&x| float(x))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_timeseries(path: &Path, records: &[RunRecord]) -> io::Result<()> {
    write_lines(
        path,
        RunRecord::HEADER,
        records.iter().map(|r| join(&r.fields())),
    )
}

/// Rows of `(t, simulated h, analytic h)`.
pub fn write_overlay(path: &Path, rows: &[(f64, f64, Option<f64>)]) -> io::Result<()> {
    write_lines(
        path,
        OVERLAY_HEADER,
        rows.iter()
            .map(|&(t, h, exact)| format!("{},{},{}", float(t), float(h), opt_float(exact))),
    )
}

pub fn write_profiles(path: &Path, snapshots: &[Snapshot]) -> io::Result<()> {
    let rows = snapshots
        .iter()
        .flat_map(|s| s.r.iter().zip(&s.u).map(move |(&r, &u)| join(&[s.t, r, u])));
    write_lines(path, PROFILES_HEADER, rows)
}

pub fn write_picard(path: &Path, increments: &[f64], factors: &[f64]) -> io::Result<()> {
    let rows = increments.iter().enumerate().map(|(i, &inc)| {
        let factor = i.checked_sub(1).and_then(|k| factors.get(k)).copied();
        format!("{},{},{}", i + 1, float(inc), opt_float(factor))
    });
    write_lines(path, PICARD_HEADER, rows)
}

pub fn write_convergence(path: &Path, table: &ConvergenceTable) -> io::Result<()> {
    let rows = table.rows.iter().map(|r| {
        format!(
            "{},{},{},{},{},{}",
            r.quantity.name(),
            r.level,
            r.grid_n,
            float(r.dt),
            float(r.error),
            opt_float(r.order)
        )
    });
    write_lines(path, ConvergenceTable::CSV_HEADER, rows)
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub a: Option<f64>,
    pub b: f64,
    pub mass: f64,
    pub summary: Summary,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> io::Result<()> {
    let lines = rows.iter().enumerate().map(|(i, row)| {
        let s = &row.summary;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            i,
            row.n,
            opt_float(row.a),
            float(row.b),
            float(row.mass),
            opt_float(s.critical_mass),
            s.regime.unwrap_or_default(),
            s.event.unwrap_or_default(),
            opt_float(s.event_time),
            opt_float(s.oracle_event_time),
            opt_float(s.max_mass_drift),
            if s.diagnostic.is_some() {
                "error"
            } else {
                "ok"
            },
        )
    });
    write_lines(path, SWEEP_HEADER, lines)
}

pub fn point_file(index: usize) -> String {
    format!("point_{index:04}.json")
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub params: Params,
    pub regime: Option<&'static str>,
    pub critical_mass: Option<f64>,
    pub event: Option<&'static str>,
    pub event_time: Option<f64>,
    pub oracle_event_time: Option<f64>,
    pub max_mass_drift: Option<f64>,
    pub picard_iterations: Option<usize>,
    pub contraction_factors: Option<Vec<f64>>,
    /// Run settings outside `params`, so the summary can be fed back as a config.
    pub settings: Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl Summary {
    pub fn new(params: Params, settings: Settings) -> Self {
        Self {
            params,
            regime: None,
            critical_mass: None,
            event: None,
            event_time: None,
            oracle_event_time: None,
            max_mass_drift: None,
            picard_iterations: None,
            contraction_factors: None,
            settings,
            diagnostic: None,
        }
    }
}

pub fn write_summary(path: &Path, summary: &Summary) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Appends a timestamped line to `run.log`. Wall-clock time appears only here.
pub fn log(dir: &Path, message: &str) -> io::Result<()> {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join(RUN_LOG))?;
    writeln!(f, "{}.{:03} {message}", now.as_secs(), now.subsec_millis())
}
