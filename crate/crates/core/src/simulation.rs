//! Time loops: the coupled density/signal/radius run and the decoupled
//! exact-gradient radius run.

use crate::diagnostics::{crossing_time, detect_event, total_mass, EventKind, EventReport};
use crate::elliptic::{restrict_to_fixed_grid, solve_v, vr_at, weighted_mean, SourceField};
use crate::freeboundary::{boundary_speed, step_h, GradientSource};
use crate::grid::RadialGrid;
use crate::parabolic::{Parabolic, StepContext};
use crate::params::Params;
use crate::state::{RunRecord, UState, VState};
use crate::{Error, Result};

/// Radial density profile at a requested time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub event: Option<EventReport>,
    pub snapshots: Vec<Snapshot>,
    pub initial_mass: f64,
    pub max_mass_drift: f64,
    /// `max |v_r(h) - (M h - M h^{1-n})| / (1 + |M h^{1-n}|)` over records.
    pub max_gradient_defect: f64,
    /// `min_t (min_j u_j / max_j u_j)`.
    pub min_density_ratio: f64,
    /// Worst `|ball average of v| / max |v|` over elliptic solves.
    pub max_signal_mean: f64,
    /// Worst `|v_r(1)|` over elliptic solves.
    pub max_outer_gradient: f64,
    pub final_state: Option<UState>,
}

impl RunOutput {
    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    pub fn final_radius(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.h)
    }
}

/// Exact boundary gradient `M h - M h^{1-n}`.
pub fn exact_boundary_gradient(h: f64, n: u32, mass: f64) -> f64 {
    mass * h - mass * h.powi(1 - n as i32)
}

fn gradient_defect(vr_h: f64, h: f64, n: u32, mass: f64) -> f64 {
    let far = mass * h.powi(1 - n as i32);
    (vr_h - exact_boundary_gradient(h, n, mass)).abs() / (1.0 + far.abs())
}

struct Coupled<'a> {
    params: &'a Params,
    stepper: Parabolic,
    mass0: f64,
    c: f64,
}

impl Coupled<'_> {
    fn grid(&self) -> &RadialGrid {
        self.stepper.grid()
    }

    fn signal(&self, state: &UState) -> Result<(SourceField, VState)> {
        let src = restrict_to_fixed_grid(state, self.params.grid_n, self.params.n, self.c);
        let v = solve_v(&src, self.params.tol_elliptic)?;
        Ok((src, v))
    }

    // One coupled step of length dt from `state` with its signal `v`.
    fn advance(&self, state: &UState, v: &VState, dt: f64, implicit: bool) -> Result<UState> {
        let p = self.params;
        let h = state.h;
        let t = state.t;
        let k = p.k_law.eval(h, t);
        let h_dot = k + vr_at(v, h)?;
        let mut signal = v.clone();
        let mut next = None;
        for _ in 0..p.coupling_subiters {
            let h_next = step_h(h, t, &GradientSource::Numeric(&signal), p, dt)?;
            let ctx = StepContext {
                h,
                h_next,
                h_dot,
                signal: &signal,
                k_boundary: k,
                dt,
            };
            let stepped = if implicit {
                self.stepper.step_u_implicit(state, &ctx)?
            } else {
                self.stepper.step_u(state, &ctx)?
            };
            if p.coupling_subiters > 1 {
                signal = self.signal(&stepped)?.1;
            }
            next = Some(stepped);
        }
        let mut next = next.expect("at least one coupling iteration");
        if p.renormalize_mass {
            let factor = self.mass0 / total_mass(&next, self.grid());
            next.u.iter_mut().for_each(|x| *x *= factor);
        }
        Ok(next)
    }
}

/// Transport switches to the implicit update when its explicit limit falls
/// below this fraction of the other step limits.
pub const IMPLICIT_TRANSPORT_RATIO: f64 = 0.1;

/// Coupled run: density (IMEX, front-fixed), signal (quadrature) and radius
/// (RK4 with the frozen signal), until `t_end` or a collapse/fill event.
/// Profiles are captured at the requested `snapshot_times`.
pub fn simulate(params: &Params, snapshot_times: &[f64]) -> Result<RunOutput> {
    let params = params.clone().validate()?;
    let p = &params;
    let stepper = Parabolic::new(p);
    let mass0 = p.initial_mass().mass;
    let run = Coupled {
        params: p,
        stepper,
        mass0,
        c: p.n as f64 * mass0,
    };
    let dt_cap = p.dt_value();
    let mut state = UState::initial(p, run.grid(), mass0);
    let mass_start = total_mass(&state, run.grid());

    let mut pending: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|t| *t >= 0.0)
        .collect();
    pending.sort_by(f64::total_cmp);
    pending.dedup();
    let mut pending = pending.into_iter().peekable();

    let mut out = RunOutput {
        records: Vec::new(),
        event: None,
        snapshots: Vec::new(),
        initial_mass: mass0,
        max_mass_drift: 0.0,
        max_gradient_defect: 0.0,
        min_density_ratio: f64::INFINITY,
        max_signal_mean: 0.0,
        max_outer_gradient: 0.0,
        final_state: None,
    };

    let mut event: Option<(EventKind, f64)> = None;
    loop {
        let (src, v) = run.signal(&state)?;
        let h = state.h;
        let vr_h = vr_at(&v, h)?;
        let mass = total_mass(&state, run.grid());
        let drift = (mass - mass_start).abs() / mass_start;
        let u_max = state.u_max();
        out.records.push(RunRecord {
            t: state.t,
            h,
            mass,
            u_max,
            vr_h,
            elliptic_residual: (src.correction() / run.c).abs(),
            mass_drift: drift,
        });
        out.max_mass_drift = out.max_mass_drift.max(drift);
        out.max_gradient_defect = out
            .max_gradient_defect
            .max(gradient_defect(vr_h, h, p.n, mass0));
        out.min_density_ratio = out.min_density_ratio.min(state.u_min() / u_max);
        let (mean, _) = weighted_mean(&v, p.n);
        let vmax = v.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if vmax > 0.0 {
            out.max_signal_mean = out.max_signal_mean.max(mean.abs() / vmax);
        }
        out.max_outer_gradient = out.max_outer_gradient.max(v.vr.last().unwrap().abs());
        while let Some(&ts) = pending.peek() {
            if (ts - state.t).abs() <= 1e-12 * ts.max(1.0) {
                let (r, u) = state.radial_profile();
                out.snapshots.push(Snapshot { t: state.t, r, u });
                pending.next();
            } else if ts < state.t {
                pending.next();
            } else {
                break;
            }
        }

        if let Some((kind, time)) = event {
            out.event = Some(EventReport { kind, time, mass });
            break;
        }
        let remaining = p.t_end - state.t;
        if remaining <= 1e-12 * p.t_end {
            break;
        }

        let k = p.k_law.eval(h, state.t);
        let h_dot = k + vr_h;
        let mut dt = dt_cap
            .min(run.stepper.motion_dt(h, h_dot, p.cfl))
            .min(remaining);
        let transport = run.stepper.transport_dt(h, h_dot, &v, k, p.cfl);
        let implicit = transport < IMPLICIT_TRANSPORT_RATIO * dt;
        if !implicit {
            dt = dt.min(transport);
        }
        if let Some(&ts) = pending.peek() {
            if ts > state.t {
                dt = dt.min(ts - state.t);
            }
        }

        let mut attempt = 0;
        let next = loop {
            match run.advance(&state, &v, dt, implicit) {
                Ok(next) => break next,
                Err(Error::LeftDomain { .. } | Error::CflViolation { .. }) if attempt < 60 => {
                    dt *= 0.5;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        let kind = detect_event(next.h, p);
        if kind != EventKind::None {
            let threshold = match kind {
                EventKind::Collapse => p.eps_collapse,
                _ => 1.0 - p.eps_fill,
            };
            event = Some((kind, crossing_time(state.t, h, next.t, next.h, threshold)));
        }
        state = next;
    }
    out.final_state = Some(state);
    Ok(out)
}

/// Largest relative radius change per step in the exact-gradient run.
pub const EXACT_RELATIVE_STEP: f64 = 0.01;
/// Radius below which the exact-gradient run extrapolates to `h = 0`.
pub const EXACT_COLLAPSE_FLOOR: f64 = 1e-6;

/// Decoupled radius run with the exact gradient `M h - M h^{1-n}`.
///
/// Steps are `min(dt, 0.01 h / |h'|)`. Events are the true ends `h = 0` and
/// `h = 1`: a fill is located by bisecting the RK4 step length, a collapse
/// by extrapolating `s = h^n` linearly from `h = 1e-6`.
pub fn integrate_exact(params: &Params) -> Result<RunOutput> {
    let params = params.clone().validate()?;
    let p = &params;
    let mass = p.initial_mass().mass;
    let grad = GradientSource::Exact { mass };
    let dt = p.dt_value();
    let mut t = 0.0;
    let mut h = p.b;
    let mut out = RunOutput {
        records: Vec::new(),
        event: None,
        snapshots: Vec::new(),
        initial_mass: mass,
        max_mass_drift: 0.0,
        max_gradient_defect: 0.0,
        min_density_ratio: f64::NAN,
        max_signal_mean: 0.0,
        max_outer_gradient: 0.0,
        final_state: None,
    };
    let record = |t: f64, h: f64| RunRecord {
        t,
        h,
        mass,
        u_max: f64::NAN,
        vr_h: exact_boundary_gradient(h, p.n, mass),
        elliptic_residual: 0.0,
        mass_drift: 0.0,
    };
    out.records.push(record(t, h));
    while p.t_end - t > 1e-12 * p.t_end {
        let speed = boundary_speed(h, t, &grad, p)?;
        let mut step = dt.min(p.t_end - t);
        if speed != 0.0 {
            step = step.min(EXACT_RELATIVE_STEP * h / speed.abs());
        }
        match step_h(h, t, &grad, p, step) {
            Ok(next) if next < 1.0 => {
                h = next;
                t += step;
                out.records.push(record(t, h));
                if h <= EXACT_COLLAPSE_FLOOR {
                    let speed = boundary_speed(h, t, &grad, p)?;
                    let time = t - h / (p.n as f64 * speed);
                    out.event = Some(EventReport {
                        kind: EventKind::Collapse,
                        time,
                        mass,
                    });
                    break;
                }
            }
            Ok(_) | Err(Error::LeftDomain { .. }) if speed > 0.0 => {
                let tau = bisect_fill(h, t, &grad, p, step)?;
                out.records.push(record(t + tau, 1.0));
                out.event = Some(EventReport {
                    kind: EventKind::Fill,
                    time: t + tau,
                    mass,
                });
                break;
            }
            Ok(_) => unreachable!("a non-increasing radius cannot reach 1"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Fixed-step exact-gradient RK4 from `h = b` to `t_end`, without the
/// relative step cap; used for order studies.
pub fn integrate_exact_fixed(params: &Params, dt: f64, t_end: f64) -> Result<f64> {
    let mass = params.initial_mass().mass;
    let grad = GradientSource::Exact { mass };
    let steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let mut h = params.b;
    for i in 0..steps {
        h = step_h(h, i as f64 * dt, &grad, params, dt)?;
    }
    Ok(h)
}

// Step length in (0, step] at which the RK4 step lands on h = 1.
fn bisect_fill(h: f64, t: f64, grad: &GradientSource, p: &Params, step: f64) -> Result<f64> {
    let land = |tau: f64| -> Result<f64> {
        let f = |h: f64, t: f64| boundary_speed(h, t, grad, p);
        let k1 = f(h, t)?;
        let k2 = f(h + 0.5 * tau * k1, t + 0.5 * tau)?;
        let k3 = f(h + 0.5 * tau * k2, t + 0.5 * tau)?;
        let k4 = f(h + tau * k3, t + tau)?;
        Ok(h + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - 1.0)
    };
    let (mut lo, mut hi) = (0.0, step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if land(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
