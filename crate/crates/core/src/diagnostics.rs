//! Mass audit, event detection and convergence studies.

use std::thread;

use serde::Serialize;

use crate::analytic::{classify, h_exact};
use crate::elliptic::{manufactured_error, manufactured_source, solve_v};
use crate::grid::RadialGrid;
use crate::params::{KLaw, Params, TimeStep};
use crate::simulation::{integrate_exact, integrate_exact_fixed, simulate};
use crate::state::UState;
use crate::{Error, Result};

/// Discrete `∫_0^h r^{n-1} u dr = h^n Σ_j V_j u_j`.
pub fn total_mass(state: &UState, grid: &RadialGrid) -> f64 {
    state.h.powi(grid.dim() as i32) * grid.moment(&state.u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    None,
    Collapse,
    Fill,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::None => "None",
            EventKind::Collapse => "Collapse",
            EventKind::Fill => "Fill",
        }
    }
}

/// Threshold test on the radius: `h <= eps_collapse` or `h >= 1 - eps_fill`.
pub fn detect_event(h: f64, params: &Params) -> EventKind {
    if h <= params.eps_collapse {
        EventKind::Collapse
    } else if h >= 1.0 - params.eps_fill {
        EventKind::Fill
    } else {
        EventKind::None
    }
}

/// Time at which the radius crosses `threshold` inside the step
/// `(t0, h0) -> (t1, h1)`, by linear interpolation.
pub fn crossing_time(t0: f64, h0: f64, t1: f64, h1: f64, threshold: f64) -> f64 {
    if h1 == h0 {
        return t1;
    }
    let w = ((threshold - h0) / (h1 - h0)).clamp(0.0, 1.0);
    t0 + w * (t1 - t0)
}

/// Detected event with its summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventReport {
    pub kind: EventKind,
    pub time: f64,
    /// Conserved mass at the event (the Dirac weight divided by the sphere area
    /// on collapse).
    pub mass: f64,
}

/// Quantity tracked by [`convergence_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Coupled run: `|h(T) - h_ref(T)|`.
    CoupledH,
    /// Coupled run: max relative mass drift.
    MassDrift,
    /// Coupled run: max normalized boundary-gradient defect.
    GradientDefect,
    /// Exact-gradient RK4 at a fixed step ladder: `|h(T) - h_ref(T)|`.
    ExactH,
    /// Quadrature signal solve against `v* = cos(π r)`.
    EllipticMms,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Quantity::CoupledH,
        Quantity::MassDrift,
        Quantity::GradientDefect,
        Quantity::ExactH,
        Quantity::EllipticMms,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::CoupledH => "coupled_h",
            Quantity::MassDrift => "mass_drift",
            Quantity::GradientDefect => "gradient_defect",
            Quantity::ExactH => "exact_h",
            Quantity::EllipticMms => "elliptic_mms",
        }
    }
}

/// Errors at or below this level are rounding noise; no order is reported
/// for a pair that touches it.
pub const ROUNDING_FLOOR: f64 = 1e-11;

/// One level of one study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub quantity: Quantity,
    pub level: usize,
    pub grid_n: usize,
    pub dt: f64,
    pub error: f64,
    /// `log2(e_{l-1} / e_l)`; absent on the first level and at the rounding floor.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    /// Final time of the coupled runs.
    pub horizon: f64,
    /// Final time of the exact-gradient ladder.
    pub exact_horizon: f64,
    pub rows: Vec<StudyRow>,
}

impl ConvergenceTable {
    pub const CSV_HEADER: &'static str = "quantity,level,grid_n,dt,error,order";

    pub fn rows_for(&self, q: Quantity) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(move |r| r.quantity == q)
    }

    pub fn errors(&self, q: Quantity) -> Vec<f64> {
        self.rows_for(q).map(|r| r.error).collect()
    }

    /// Order of the finest pair above the rounding floor.
    pub fn final_order(&self, q: Quantity) -> Option<f64> {
        self.rows_for(q).filter_map(|r| r.order).last()
    }

    /// Smallest reported order, if any pair was above the rounding floor.
    pub fn min_order(&self, q: Quantity) -> Option<f64> {
        self.rows_for(q).filter_map(|r| r.order).reduce(f64::min)
    }
}

fn push_rows(rows: &mut Vec<StudyRow>, q: Quantity, levels: &[(usize, f64, f64)]) {
    let mut prev: Option<f64> = None;
    for (level, &(grid_n, dt, error)) in levels.iter().enumerate() {
        let order = prev
            .filter(|p| *p > ROUNDING_FLOOR && error > ROUNDING_FLOOR)
            .map(|p| (p / error).log2());
        rows.push(StudyRow {
            quantity: q,
            level,
            grid_n,
            dt,
            error,
            order,
        });
        prev = Some(error);
    }
}

// Radius reference at time t: closed form for k = a|x|, otherwise a fine
// exact-gradient run.
fn reference_radius(params: &Params, t: f64) -> Result<f64> {
    let mass = params.initial_mass().mass;
    match params.k_law {
        KLaw::Linear { a } => h_exact(t, a, params.b, params.n, mass),
        KLaw::Tabulated(_) => integrate_exact_fixed(params, t / 8192.0, t),
    }
}

// Event time of the exact-gradient problem, if any.
fn reference_event(params: &Params) -> Result<Option<f64>> {
    let mass = params.initial_mass().mass;
    Ok(match params.k_law {
        KLaw::Linear { a } => classify(a, params.b, params.n, mass).event_time(),
        KLaw::Tabulated(_) => integrate_exact(params)?.event.map(|e| e.time),
    })
}

/// Refinement study over `levels` levels, `grid_n · 2^l` with the step cap
/// halved per level.
///
/// Coupled runs stop at `min(t_end, 0.8 T_event)` and execute concurrently.
/// The exact-gradient ladder uses steps `T / (8 · 2^l)` up to half the event
/// time (or `t_end`), and the manufactured elliptic study uses `grid_n · 2^l`
/// cells.
pub fn convergence_study(params: &Params, levels: usize) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::InvalidParameter(format!(
            "convergence study needs at least 3 levels, got {levels}"
        )));
    }
    let base = params.clone().validate()?;
    let event = reference_event(&base)?;
    let horizon = event.map_or(base.t_end, |te| base.t_end.min(0.8 * te));
    let exact_horizon = event.map_or(base.t_end, |te| base.t_end.min(0.5 * te));

    let level_params: Vec<Params> = (0..levels)
        .map(|l| {
            let scale = (1usize << l) as f64;
            Params {
                grid_n: base.grid_n << l,
                t_end: horizon,
                dt: match params.dt {
                    TimeStep::Fixed(dt) => TimeStep::Fixed(dt / scale),
                    TimeStep::Auto => TimeStep::Auto,
                },
                ..base.clone()
            }
            .validate()
        })
        .collect::<Result<_>>()?;

    let runs: Vec<Result<_>> = thread::scope(|scope| {
        let handles: Vec<_> = level_params
            .iter()
            .map(|p| scope.spawn(move || simulate(p, &[])))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence level panicked"))
            .collect()
    });

    let h_ref = reference_radius(&base, horizon)?;
    let mut coupled = Vec::new();
    let mut drift = Vec::new();
    let mut defect = Vec::new();
    for (p, run) in level_params.iter().zip(runs) {
        let run = run?;
        let dt = p.dt_value();
        coupled.push((p.grid_n, dt, (run.final_radius() - h_ref).abs()));
        drift.push((p.grid_n, dt, run.max_mass_drift));
        defect.push((p.grid_n, dt, run.max_gradient_defect));
    }

    let exact_ref = reference_radius(&base, exact_horizon)?;
    let exact = (0..levels)
        .map(|l| {
            let dt = exact_horizon / (8.0 * (1usize << l) as f64);
            let h = integrate_exact_fixed(&base, dt, exact_horizon)?;
            Ok((0, dt, (h - exact_ref).abs()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mms = (0..levels)
        .map(|l| {
            let cells = base.grid_n << l;
            let v = solve_v(&manufactured_source(base.n, cells), base.tol_elliptic)?;
            Ok((cells, 0.0, manufactured_error(&v, base.n)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    push_rows(&mut rows, Quantity::CoupledH, &coupled);
    push_rows(&mut rows, Quantity::MassDrift, &drift);
    push_rows(&mut rows, Quantity::GradientDefect, &defect);
    push_rows(&mut rows, Quantity::ExactH, &exact);
    push_rows(&mut rows, Quantity::EllipticMms, &mms);
    Ok(ConvergenceTable {
        horizon,
        exact_horizon,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Profile;

    fn base() -> Params {
        Params::default().validate().unwrap()
    }

    #[test]
    fn total_mass_examples() {
        let p = base();
        let grid = RadialGrid::new(3, 128);
        let uniform = UState {
            h: 0.5,
            t: 0.0,
            u: vec![3.0 / 0.125; 129],
        };
        assert!((total_mass(&uniform, &grid) - 1.0).abs() < 1e-12);
        let zero = UState {
            u: vec![0.0; 129],
            ..uniform
        };
        assert_eq!(total_mass(&zero, &grid), 0.0);
        let bump = Params {
            u0: Profile::Bump {
                peak: 10.0,
                floor: 1.0,
            },
            grid_n: 128,
            ..p
        };
        let m = bump.initial_mass().mass;
        let st = UState::initial(&bump, &grid, m);
        assert!((total_mass(&st, &grid) - m).abs() <= 1e-10 * m);
    }

    #[test]
    fn event_thresholds() {
        let p = base();
        assert_eq!(detect_event(0.5, &p), EventKind::None);
        assert_eq!(detect_event(5e-4, &p), EventKind::Collapse);
        assert_eq!(detect_event(0.9995, &p), EventKind::Fill);
    }

    #[test]
    fn crossing_is_linear() {
        assert!((crossing_time(0.0, 1.0, 1.0, 0.0, 0.25) - 0.75).abs() < 1e-15);
        assert_eq!(crossing_time(0.0, 0.5, 1.0, 0.5, 0.1), 1.0);
    }

    #[test]
    fn study_rejects_two_levels() {
        assert!(matches!(
            convergence_study(&base(), 2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn orders_skip_rounding_floor() {
        let mut rows = Vec::new();
        push_rows(
            &mut rows,
            Quantity::MassDrift,
            &[(8, 0.0, 4e-4), (16, 0.0, 1e-4), (32, 0.0, 1e-14)],
        );
        assert_eq!(rows[0].order, None);
        assert!((rows[1].order.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(rows[2].order, None);
    }
}
