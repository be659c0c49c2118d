//! Free-boundary evolution `h' = k(h, t) + v_r(h, t)`.
//!
//! Three routes are provided: a classical RK4 step driven either by a frozen
//! numerical signal or by the exact boundary gradient `M h - M h^{1-n}`; and
//! the fixed-point map `G: h -> b + ∫_0^t (k + v_r)(h(s), s) ds`, iterated
//! from `h ≡ b` with the full density/signal solve along each frozen curve.

use serde::Serialize;

use crate::diagnostics::total_mass;
use crate::elliptic::{restrict_to_fixed_grid, solve_v, vr_at};
use crate::parabolic::{Parabolic, StepContext};
use crate::params::Params;
use crate::state::{BoundaryCurve, UState, VState};
use crate::{Error, Result};

/// Where the boundary gradient `v_r(h)` comes from.
#[derive(Debug, Clone, Copy)]
pub enum GradientSource<'a> {
    /// Interpolate a frozen signal.
    Numeric(&'a VState),
    /// `M h - M h^{1-n}` with the conserved mass `M`.
    Exact { mass: f64 },
}

/// `k(h, t) + v_r(h, t)`.
pub fn boundary_speed(h: f64, t: f64, grad: &GradientSource, params: &Params) -> Result<f64> {
    let k = params.k_law.eval(h, t);
    let vr = match grad {
        GradientSource::Numeric(v) => vr_at(v, h).map_err(|_| Error::LeftDomain { h })?,
        GradientSource::Exact { mass } => {
            if h <= 0.0 {
                return Err(Error::LeftDomain { h });
            }
            mass * h - mass * h.powi(1 - params.n as i32)
        }
    };
    let speed = k + vr;
    if speed.is_finite() {
        Ok(speed)
    } else {
        Err(Error::LeftDomain { h })
    }
}

fn rk4(h: f64, t: f64, grad: &GradientSource, params: &Params, dt: f64) -> Result<f64> {
    let f = |h: f64, t: f64| boundary_speed(h, t, grad, params);
    let k1 = f(h, t)?;
    let k2 = f(h + 0.5 * dt * k1, t + 0.5 * dt)?;
    let k3 = f(h + 0.5 * dt * k2, t + 0.5 * dt)?;
    let k4 = f(h + dt * k3, t + dt)?;
    Ok(h + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// One classical RK4 step of the radius. Leaving `(0, 1]` is reported as
/// [`Error::LeftDomain`]; drivers turn it into a collapse or fill event.
pub fn step_h(h: f64, t: f64, grad: &GradientSource, params: &Params, dt: f64) -> Result<f64> {
    let next = rk4(h, t, grad, params, dt)?;
    if !(next > 0.0 && next <= 1.0) {
        return Err(Error::LeftDomain { h: next });
    }
    Ok(next)
}

/// Result of [`check_in_b`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BReport {
    pub pass: bool,
    pub starts_at_b: bool,
    /// Largest difference quotient and the interval where it occurs.
    pub worst_quotient: f64,
    pub worst_interval: (f64, f64),
    /// `b - m0 T` and `b + m0 T`.
    pub lower: f64,
    pub upper: f64,
    pub within_bounds: bool,
}

/// Membership of a sampled curve in the admissible set: `h(0) = b`,
/// difference quotients bounded by `m0`, and
/// `0 < b - m0 T <= h(t) <= b + m0 T < 1`.
pub fn check_in_b(curve: &BoundaryCurve, params: &Params, horizon: f64) -> BReport {
    let b = params.b;
    let m0 = curve.m0;
    let starts_at_b = (curve.values[0] - b).abs() <= 1e-12;
    let mut worst_quotient: f64 = 0.0;
    let mut worst_interval = (curve.times[0], curve.times[0]);
    for i in 0..curve.times.len().saturating_sub(1) {
        let dt = curve.times[i + 1] - curve.times[i];
        let q = (curve.values[i + 1] - curve.values[i]).abs() / dt;
        if q > worst_quotient {
            worst_quotient = q;
            worst_interval = (curve.times[i], curve.times[i + 1]);
        }
    }
    let lower = b - m0 * horizon;
    let upper = b + m0 * horizon;
    let slack = 1e-12;
    let within_bounds = lower > 0.0
        && upper < 1.0
        && curve
            .values
            .iter()
            .all(|&h| h >= lower - slack && h <= upper + slack);
    let pass = starts_at_b && worst_quotient <= m0 * (1.0 + 1e-12) && within_bounds;
    BReport {
        pass,
        starts_at_b,
        worst_quotient,
        worst_interval,
        lower,
        upper,
        within_bounds,
    }
}

/// Converged fixed point of `G` and its iteration history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardOutcome {
    pub curve: BoundaryCurve,
    pub iterations: usize,
    /// `‖h^{m+1} - h^m‖ / ‖h^m - h^{m-1}‖` for every iterate after the first.
    pub contraction_factors: Vec<f64>,
    /// `‖h^{m+1} - h^m‖` per iteration.
    pub increments: Vec<f64>,
}

/// Iterates `h^{m+1} = G(h^m)` from `h^0 ≡ b` until the sup-norm increment
/// drops below `tol_picard`.
pub fn picard_solve(params: &Params, horizon: f64, m0: f64) -> Result<PicardOutcome> {
    let params = &params.clone().validate()?;
    let limit = 0.5 * params.b.min(1.0 - params.b) / horizon;
    if !(horizon > 0.0 && m0 >= 0.0 && m0 < limit) {
        return Err(Error::InvalidParameter(format!(
            "Picard needs 0 <= m0 < min(b, 1-b) / (2 T) = {limit}, got m0 = {m0} on T = {horizon}"
        )));
    }
    let steps = (horizon / params.dt_value()).ceil().max(10.0) as usize;
    let times: Vec<f64> = (0..=steps)
        .map(|i| horizon * i as f64 / steps as f64)
        .collect();
    let mut current = BoundaryCurve::constant(times, params.b, m0);
    let mut increments = Vec::new();
    let mut contraction_factors = Vec::new();
    for iteration in 1..=params.max_picard_iter {
        let next = picard_map(params, &current)?;
        let report = check_in_b(&next, params, horizon);
        if !report.pass {
            return Err(Error::BViolation {
                iteration,
                detail: format!(
                    "worst quotient {:.4} on {:?} vs m0 = {m0}; bounds [{:.4}, {:.4}]",
                    report.worst_quotient, report.worst_interval, report.lower, report.upper
                ),
            });
        }
        let increment = next.sup_distance(&current);
        if let Some(&prev) = increments.last() {
            contraction_factors.push(if prev > 0.0 { increment / prev } else { 0.0 });
        }
        increments.push(increment);
        current = next;
        if increment <= params.tol_picard {
            return Ok(PicardOutcome {
                curve: current,
                iterations: iteration,
                contraction_factors,
                increments,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: params.max_picard_iter,
        last_factor: contraction_factors.last().copied().unwrap_or(f64::NAN),
    })
}

/// One application of `G`: solve density and signal along the frozen curve,
/// then integrate `k + v_r` at the frozen radius by the trapezoid rule.
pub fn picard_map(params: &Params, curve: &BoundaryCurve) -> Result<BoundaryCurve> {
    let stepper = Parabolic::new(params);
    let grid = stepper.grid();
    let mass0 = params.initial_mass().mass;
    let mut state = UState::initial(params, grid, mass0);
    let times = &curve.times;
    let mut integrand = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let t = times[i];
        let h = curve.values[i];
        let signal = frozen_signal(&state, params, grid)?;
        let k = params.k_law.eval(h, t);
        integrand.push(k + vr_at(&signal, h)?);
        if i + 1 == times.len() {
            break;
        }
        let dt = times[i + 1] - t;
        let h_dot = (curve.values[i + 1] - h) / dt;
        // sub-step along the linear segment when the explicit part demands it
        let stable = stepper.stable_dt(h, h_dot, &signal, k, params.cfl);
        let substeps = (dt / stable).ceil().max(1.0) as usize;
        let tau = dt / substeps as f64;
        let mut sig = signal;
        for s in 0..substeps {
            let hs = h + h_dot * tau * s as f64;
            if s > 0 {
                state.h = hs;
                sig = frozen_signal(&state, params, grid)?;
            }
            let ctx = StepContext {
                h: hs,
                h_next: hs + h_dot * tau,
                h_dot,
                signal: &sig,
                k_boundary: params.k_law.eval(hs, t + tau * s as f64),
                dt: tau,
            };
            state = stepper.step_u(&state, &ctx)?;
        }
        state.h = curve.values[i + 1];
        state.t = times[i + 1];
    }
    let mut values = Vec::with_capacity(times.len());
    values.push(params.b);
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        values.push(values[i - 1] + 0.5 * dt * (integrand[i - 1] + integrand[i]));
    }
    Ok(BoundaryCurve {
        times: times.clone(),
        values,
        m0: curve.m0,
    })
}

// Along a frozen curve the kinematic law fails and mass is not conserved, so
// the background tracks the current mass to keep the Neumann problem solvable.
fn frozen_signal(
    state: &UState,
    params: &Params,
    grid: &crate::grid::RadialGrid,
) -> Result<VState> {
    let c = params.n as f64 * total_mass(state, grid);
    solve_v(
        &restrict_to_fixed_grid(state, params.grid_n, params.n, c),
        params.tol_elliptic,
    )
}
