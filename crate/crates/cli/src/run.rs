//! Mode dispatch. Each mode computes in memory and the caller writes files.

use fbchemo::analytic::{classify, critical_mass, h_exact};
use fbchemo::diagnostics::{convergence_study, ConvergenceTable};
use fbchemo::freeboundary::{picard_solve, PicardOutcome};
use fbchemo::simulation::{exact_boundary_gradient, integrate_exact, simulate, RunOutput};
use fbchemo::{EventKind, KLaw, Params, Regime, RunRecord};

use crate::config::{profile_with_mass, ConfigError, Mode, RunConfig, Settings};
use crate::output::{Summary, SweepRow};

/// Everything a single (non-sweep) run produces.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub summary: Summary,
    pub records: Vec<RunRecord>,
    pub overlay: Vec<(f64, f64, Option<f64>)>,
    pub run: Option<RunOutput>,
    pub picard: Option<PicardOutcome>,
    pub convergence: Option<ConvergenceTable>,
}

/// A run that failed inside the solver; the summary carries the diagnostic.
#[derive(Debug)]
pub struct Failed {
    pub summary: Box<Summary>,
    pub error: fbchemo::Error,
}

/// Closed-form regime, if `k` is linear.
fn oracle_of(params: &Params) -> Option<(f64, Regime)> {
    let a = params.k_law.linear_rate()?;
    let mass = params.initial_mass().mass;
    Some((a, classify(a, params.b, params.n, mass)))
}

fn base_summary(params: &Params, settings: &Settings) -> Summary {
    let mut s = Summary::new(params.clone(), settings.clone());
    if let Some((a, regime)) = oracle_of(params) {
        s.regime = Some(regime.name());
        s.critical_mass = Some(critical_mass(a, params.b, params.n));
        s.oracle_event_time = regime.event_time();
    }
    s
}

fn analytic_h(params: &Params, t: f64) -> Option<f64> {
    let a = params.k_law.linear_rate()?;
    h_exact(t, a, params.b, params.n, params.initial_mass().mass).ok()
}

fn overlay_of(params: &Params, records: &[RunRecord]) -> Vec<(f64, f64, Option<f64>)> {
    records
        .iter()
        .map(|r| (r.t, r.h, analytic_h(params, r.t)))
        .collect()
}

fn from_run(params: &Params, settings: &Settings, run: RunOutput) -> Artifacts {
    let mut summary = base_summary(params, settings);
    summary.event = Some(run.event.map_or(EventKind::None, |e| e.kind).name());
    summary.event_time = run.event.map(|e| e.time);
    summary.max_mass_drift = Some(run.max_mass_drift);
    Artifacts {
        summary,
        overlay: overlay_of(params, &run.records),
        records: run.records.clone(),
        run: Some(run),
        picard: None,
        convergence: None,
    }
}

fn empty(summary: Summary) -> Artifacts {
    Artifacts {
        summary,
        records: Vec::new(),
        overlay: Vec::new(),
        run: None,
        picard: None,
        convergence: None,
    }
}

/// Samples the closed form every `dt` up to `t_end` or the event.
fn oracle(params: &Params, settings: &Settings) -> Result<Artifacts, fbchemo::Error> {
    let Some((a, regime)) = oracle_of(params) else {
        return Err(fbchemo::Error::InvalidParameter(
            "oracle mode needs k_law = linear".into(),
        ));
    };
    let mass = params.initial_mass().mass;
    let n = params.n;
    let event = regime.event_time().filter(|&t| t <= params.t_end);
    let horizon = event.unwrap_or(params.t_end);
    let steps = (horizon / params.dt_value()).ceil().max(1.0) as usize;
    let record = |t: f64, h: f64| RunRecord {
        t,
        h,
        mass,
        u_max: f64::NAN,
        vr_h: if h > 0.0 {
            exact_boundary_gradient(h, n, mass)
        } else {
            f64::NAN
        },
        elliptic_residual: 0.0,
        mass_drift: 0.0,
    };
    let mut records = Vec::with_capacity(steps + 1);
    for i in 0..steps {
        let t = horizon * i as f64 / steps as f64;
        records.push(record(t, h_exact(t, a, params.b, n, mass)?));
    }
    let end = match regime {
        _ if event.is_none() => h_exact(horizon, a, params.b, n, mass)?,
        Regime::Shrinking { .. } => 0.0,
        _ => 1.0,
    };
    records.push(record(horizon, end));
    let mut summary = base_summary(params, settings);
    summary.event = Some(match (event, regime) {
        (None, _) => EventKind::None.name(),
        (Some(_), Regime::Shrinking { .. }) => EventKind::Collapse.name(),
        (Some(_), _) => EventKind::Fill.name(),
    });
    summary.event_time = event;
    summary.max_mass_drift = Some(0.0);
    Ok(Artifacts {
        summary,
        records,
        ..empty(Summary::new(params.clone(), settings.clone()))
    })
}

fn picard(params: &Params, settings: &Settings) -> Result<Artifacts, fbchemo::Error> {
    let outcome = picard_solve(params, params.t_end, settings.m0)?;
    let mut summary = base_summary(params, settings);
    summary.picard_iterations = Some(outcome.iterations);
    summary.contraction_factors = Some(outcome.contraction_factors.clone());
    let curve = &outcome.curve;
    let overlay = curve
        .times
        .iter()
        .zip(&curve.values)
        .map(|(&t, &h)| (t, h, analytic_h(params, t)))
        .collect();
    Ok(Artifacts {
        overlay,
        picard: Some(outcome),
        ..empty(summary)
    })
}

fn converge(params: &Params, settings: &Settings) -> Result<Artifacts, fbchemo::Error> {
    let table = convergence_study(params, settings.levels)?;
    Ok(Artifacts {
        convergence: Some(table),
        ..empty(base_summary(params, settings))
    })
}

/// Runs a single mode. `Sweep` is handled by [`sweep_points`].
pub fn execute(config: &RunConfig) -> Result<Artifacts, Failed> {
    let RunConfig { params, settings } = config;
    let result = match settings.mode {
        Mode::Simulate => {
            simulate(params, &settings.snapshots).map(|r| from_run(params, settings, r))
        }
        Mode::Ode => integrate_exact(params).map(|r| from_run(params, settings, r)),
        Mode::Oracle => oracle(params, settings),
        Mode::Picard => picard(params, settings),
        Mode::Converge => converge(params, settings),
        Mode::Sweep => Err(fbchemo::Error::InvalidParameter("nested sweep".into())),
    };
    result.map_err(|error| {
        let mut summary = base_summary(params, settings);
        summary.diagnostic = Some(error.to_string());
        Failed {
            summary: Box::new(summary),
            error,
        }
    })
}

/// One point of a sweep, before it runs.
#[derive(Debug, Clone)]
pub struct Point {
    pub n: u32,
    pub a: Option<f64>,
    pub b: f64,
    /// Requested mass, if the sweep has a mass axis.
    pub mass: Option<f64>,
    pub config: RunConfig,
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Cartesian product in the order `n`, `a`, `b`, `mass` (last varies fastest).
pub fn sweep_points(config: &RunConfig) -> Result<Vec<Point>, ConfigError> {
    let base = &config.params;
    let Some(axes) = &config.settings.sweep else {
        return Err(ConfigError::Invalid(
            "sweep mode needs a [sweep] section".into(),
        ));
    };
    let a_axis: Vec<Option<f64>> = if axes.a.is_empty() {
        vec![base.k_law.linear_rate()]
    } else {
        axes.a.iter().map(|&a| Some(a)).collect()
    };
    let mut points = Vec::new();
    for &n in &axis(&axes.n, base.n) {
        for &a in &a_axis {
            for &b in &axis(&axes.b, base.b) {
                let masses: Vec<Option<f64>> = if axes.mass.is_empty() {
                    vec![None]
                } else {
                    axes.mass.iter().map(|&m| Some(m)).collect()
                };
                for mass in masses {
                    let mut params = Params {
                        n,
                        b,
                        ..base.clone()
                    };
                    if let Some(a) = a {
                        params.k_law = KLaw::Linear { a };
                    }
                    if let Some(mass) = mass {
                        params.u0 = profile_with_mass(&base.u0, n, b, mass)?;
                    }
                    let params = params.validate()?;
                    let settings = Settings {
                        mode: axes.point_mode,
                        sweep: None,
                        ..config.settings.clone()
                    };
                    points.push(Point {
                        n,
                        a,
                        b,
                        mass,
                        config: RunConfig { params, settings },
                    });
                }
            }
        }
    }
    Ok(points)
}

/// Runs one sweep point; failures are recorded in the row, not propagated.
pub fn run_point(point: &Point) -> SweepRow {
    let summary = match execute(&point.config) {
        Ok(artifacts) => artifacts.summary,
        Err(failed) => *failed.summary,
    };
    SweepRow {
        n: point.n,
        a: point.a,
        b: point.b,
        mass: point
            .mass
            .unwrap_or_else(|| point.config.params.initial_mass().mass),
        summary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{from_toml, Overrides};

    fn config(text: &str) -> RunConfig {
        from_toml(text, &Overrides::default()).unwrap()
    }

    #[test]
    fn oracle_stationary_series_is_flat() {
        let c = config(
            "mode = \"oracle\"\n[problem]\nn = 2\nb = 0.5\nmass = \"1/3\"\n[numerics]\nt_end = 0.5\ndt = 0.01\n",
        );
        let a = execute(&c).unwrap();
        assert_eq!(a.summary.regime, Some("Stationary"));
        assert_eq!(a.summary.event, Some("None"));
        assert_eq!(a.records.len(), 51);
        assert!(a.records.iter().all(|r| r.h == 0.5));
    }

    #[test]
    fn oracle_collapse_ends_at_zero() {
        let c = config("mode = \"oracle\"\n[numerics]\ndt = 1e-3\n");
        let a = execute(&c).unwrap();
        let t_star = (4.0f64 / 3.0).ln() / 6.0;
        assert_eq!(a.summary.event, Some("Collapse"));
        assert!((a.summary.event_time.unwrap() - t_star).abs() < 1e-12);
        let last = a.records.last().unwrap();
        assert_eq!((last.t, last.h), (a.summary.event_time.unwrap(), 0.0));
    }

    #[test]
    fn sweep_points_follow_the_axes() {
        let c = config("mode = \"sweep\"\n[sweep]\nmass = [0.1, \"1/7\", 0.2]\nb = [0.4, 0.5]\n");
        let points = sweep_points(&c).unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[1].b, 0.4);
        assert!((points[1].config.params.initial_mass().mass - 1.0 / 7.0).abs() < 1e-14);
        assert_eq!(points[3].b, 0.5);
        assert!(points
            .iter()
            .all(|p| p.config.settings.mode == Mode::Oracle));
    }

    #[test]
    fn solver_failures_keep_a_summary() {
        let mut c = config("mode = \"picard\"\n[numerics]\nt_end = 0.02\nm0 = 2\n");
        c.params.max_picard_iter = 3;
        let failed = execute(&c).unwrap_err();
        assert!(failed.summary.diagnostic.is_some());
        assert_eq!(failed.summary.regime, Some("Shrinking"));
    }
}
