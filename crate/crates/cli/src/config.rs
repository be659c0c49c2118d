//! Run configuration.
//!
//! A TOML file with the sections `[problem]`, `[numerics]`, `[output]` and
//! `[sweep]`, plus an optional top-level `mode`. Keys mirror the fields of
//! [`Params`]; unknown keys are errors. Scalars may be written as numbers or
//! as fraction strings such as `"1/7"`.
//!
//! A `summary.json` written by an earlier run is accepted as well: its
//! `params` and `settings` blocks reproduce that run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fbchemo::{KLaw, Params, Profile, TimeStep};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid parameters: {0}")]
    Params(#[from] fbchemo::Error),
    #[error("{0}")]
    Invalid(String),
}

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Coupled density, signal and radius.
    Simulate,
    /// Radius only, with the exact boundary gradient.
    Ode,
    /// Fixed-point iteration of the radius map.
    Picard,
    /// Closed-form evaluation for `k = a|x|`.
    Oracle,
    /// Cartesian grid over `a`, `b`, `mass` and `n`.
    Sweep,
    /// Refinement study.
    Converge,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Ode => "ode",
            Mode::Picard => "picard",
            Mode::Oracle => "oracle",
            Mode::Sweep => "sweep",
            Mode::Converge => "converge",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `"0.25"`, `"-3"` or `"p/q"`.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in {text:?}"))?;
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in {text:?}"))?;
            if q == 0.0 {
                return Err(format!("zero denominator in {text:?}"));
            }
            p / q
        }
        None => f64::from_str(text).map_err(|_| format!("not a number: {text:?}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not finite: {text:?}"))
    }
}

/// A number or a fraction string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Num(v as f64)),
            Raw::Float(v) => Ok(Num(v)),
            Raw::Text(s) => parse_number(&s).map(Num).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Problem {
    n: Option<u32>,
    b: Option<Num>,
    k_law: Option<KLaw>,
    u0: Option<Profile>,
    /// Rescales `u0` so that `∫_0^b r^{n-1} u0 = mass`.
    mass: Option<Num>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Numerics {
    grid_n: Option<usize>,
    dt: Option<TimeStep>,
    t_end: Option<Num>,
    tol_mass: Option<Num>,
    tol_elliptic: Option<Num>,
    tol_picard: Option<Num>,
    eps_collapse: Option<Num>,
    eps_fill: Option<Num>,
    cfl: Option<Num>,
    coupling_subiters: Option<usize>,
    renormalize_mass: Option<bool>,
    max_picard_iter: Option<usize>,
    m0: Option<Num>,
    levels: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Output {
    snapshots: Option<Vec<Num>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    a: Option<Vec<Num>>,
    b: Option<Vec<Num>>,
    mass: Option<Vec<Num>>,
    n: Option<Vec<u32>>,
    point_mode: Option<Mode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    mode: Option<Mode>,
    #[serde(default)]
    problem: Problem,
    #[serde(default)]
    numerics: Numerics,
    #[serde(default)]
    output: Output,
    sweep: Option<SweepSection>,
}

/// Axes of a parameter sweep. Empty axes keep the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mass: Vec<f64>,
    pub n: Vec<u32>,
    pub point_mode: Mode,
}

/// Run-level settings that are not part of [`Params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub mode: Mode,
    /// Lipschitz bound of the admissible set in Picard mode.
    pub m0: f64,
    /// Refinement levels in converge mode.
    pub levels: usize,
    pub snapshots: Vec<f64>,
    pub sweep: Option<SweepSpec>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub settings: Settings,
}

pub const DEFAULT_M0: f64 = 5.0;
pub const DEFAULT_LEVELS: usize = 3;

/// Command-line overrides, applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub grid: Option<usize>,
    pub dt: Option<TimeStep>,
    pub renormalize_mass: bool,
    pub snapshots: Option<Vec<f64>>,
}

/// Scales `profile` so that its mass on `[0, b]` in dimension `n` is `mass`.
pub fn profile_with_mass(
    profile: &Profile,
    n: u32,
    b: f64,
    mass: f64,
) -> Result<Profile, ConfigError> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if let Profile::Constant { .. } = profile {
        return Ok(Profile::Constant {
            level: n as f64 * mass / b.powi(n as i32),
        });
    }
    let probe = Params {
        n,
        b,
        u0: profile.clone(),
        ..Params::default()
    };
    let current = probe.initial_mass().mass;
    if current.is_nan() || current <= 0.0 {
        return Err(ConfigError::Invalid(
            "cannot rescale a profile with zero mass".into(),
        ));
    }
    Ok(profile.scaled(mass / current))
}

fn parse_error(path: &Path, message: impl fmt::Display) -> ConfigError {
    ConfigError::Parse {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Reads and resolves a configuration file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let config = if is_json {
        from_summary(&text).map_err(|e| parse_error(path, e))?
    } else {
        let file: ConfigFile = toml::from_str(&text).map_err(|e| parse_error(path, e.message()))?;
        resolve(file)?
    };
    apply(config, overrides)
}

/// Resolves a TOML document given as a string.
pub fn from_toml(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| parse_error(Path::new("<string>"), e.message()))?;
    apply(resolve(file)?, overrides)
}

#[derive(Deserialize)]
struct SummaryBlocks {
    params: Params,
    settings: Settings,
}

fn from_summary(text: &str) -> Result<RunConfig, serde_json::Error> {
    let blocks: SummaryBlocks = serde_json::from_str(text)?;
    Ok(RunConfig {
        params: blocks.params,
        settings: blocks.settings,
    })
}

fn resolve(file: ConfigFile) -> Result<RunConfig, ConfigError> {
    let d = Params::default();
    let p = &file.problem;
    let num = &file.numerics;
    let or = |v: Option<Num>, default: f64| v.map_or(default, |x| x.0);
    let n = p.n.unwrap_or(d.n);
    let b = or(p.b, d.b);
    let mut u0 = p.u0.clone().unwrap_or(d.u0);
    if let Some(Num(mass)) = p.mass {
        u0 = profile_with_mass(&u0, n, b, mass)?;
    }
    let params = Params {
        n,
        b,
        k_law: p.k_law.clone().unwrap_or(d.k_law),
        u0,
        grid_n: num.grid_n.unwrap_or(d.grid_n),
        dt: num.dt.unwrap_or(d.dt),
        t_end: or(num.t_end, d.t_end),
        tol_mass: or(num.tol_mass, d.tol_mass),
        tol_elliptic: or(num.tol_elliptic, d.tol_elliptic),
        tol_picard: or(num.tol_picard, d.tol_picard),
        eps_collapse: or(num.eps_collapse, d.eps_collapse),
        eps_fill: or(num.eps_fill, d.eps_fill),
        cfl: or(num.cfl, d.cfl),
        coupling_subiters: num.coupling_subiters.unwrap_or(d.coupling_subiters),
        renormalize_mass: num.renormalize_mass.unwrap_or(d.renormalize_mass),
        max_picard_iter: num.max_picard_iter.unwrap_or(d.max_picard_iter),
    };
    let nums = |v: &Option<Vec<Num>>| {
        v.as_ref()
            .map_or_else(Vec::new, |v| v.iter().map(|x| x.0).collect())
    };
    let sweep = file.sweep.as_ref().map(|s| SweepSpec {
        a: nums(&s.a),
        b: nums(&s.b),
        mass: nums(&s.mass),
        n: s.n.clone().unwrap_or_default(),
        point_mode: s.point_mode.unwrap_or(Mode::Oracle),
    });
    let settings = Settings {
        mode: file.mode.unwrap_or(Mode::Simulate),
        m0: or(num.m0, DEFAULT_M0),
        levels: num.levels.unwrap_or(DEFAULT_LEVELS),
        snapshots: nums(&file.output.snapshots),
        sweep,
    };
    Ok(RunConfig { params, settings })
}

fn apply(mut config: RunConfig, o: &Overrides) -> Result<RunConfig, ConfigError> {
    if let Some(mode) = o.mode {
        config.settings.mode = mode;
    }
    if let Some(grid) = o.grid {
        config.params.grid_n = grid;
    }
    if let Some(dt) = o.dt {
        config.params.dt = dt;
    }
    if o.renormalize_mass {
        config.params.renormalize_mass = true;
    }
    if let Some(s) = &o.snapshots {
        config.settings.snapshots = s.clone();
    }
    check(config)
}

fn check(mut config: RunConfig) -> Result<RunConfig, ConfigError> {
    config.params = config.params.validate()?;
    let s = &mut config.settings;
    s.snapshots.sort_by(f64::total_cmp);
    s.snapshots.dedup();
    if s.snapshots.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(ConfigError::Invalid(
            "snapshot times must be finite and non-negative".into(),
        ));
    }
    let p = &config.params;
    match s.mode {
        Mode::Picard => {
            let limit = 0.5 * p.b.min(1.0 - p.b) / p.t_end;
            if !(s.m0 >= 0.0 && s.m0 < limit) {
                return Err(ConfigError::Invalid(format!(
                    "picard needs 0 <= m0 < min(b, 1 - b) / (2 t_end) = {limit}, got {}",
                    s.m0
                )));
            }
        }
        Mode::Oracle if p.k_law.linear_rate().is_none() => {
            return Err(ConfigError::Invalid(
                "oracle mode needs k_law = linear".into(),
            ));
        }
        Mode::Converge if s.levels < 3 => {
            return Err(ConfigError::Invalid(format!(
                "converge needs levels >= 3, got {}",
                s.levels
            )));
        }
        Mode::Sweep => {
            let Some(sweep) = &s.sweep else {
                return Err(ConfigError::Invalid(
                    "sweep mode needs a [sweep] section".into(),
                ));
            };
            if matches!(
                sweep.point_mode,
                Mode::Sweep | Mode::Converge | Mode::Picard
            ) {
                return Err(ConfigError::Invalid(format!(
                    "sweep points run in oracle, ode or simulate mode, not {}",
                    sweep.point_mode
                )));
            }
            if sweep.point_mode == Mode::Oracle
                && p.k_law.linear_rate().is_none()
                && sweep.a.is_empty()
            {
                return Err(ConfigError::Invalid(
                    "oracle sweep needs k_law = linear or an `a` axis".into(),
                ));
            }
        }
        _ => {}
    }
    Ok(config)
}
