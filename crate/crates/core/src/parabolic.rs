//! One IMEX step of the cell density in front-fixed coordinates.
//!
//! With `y = r / h(t)` the density obeys
//! `u_t = h^{-2} Δ_y u - h^{-2} ∇·(u ∇𝔳) + (h'/h) y·∇u`, `𝔳_y(y) = h v_r(h y)`.
//! Written in conservative form the last two terms become a transport with
//! face velocity `W = v_r(h y)/h - (h'/h) y` plus the dilation `-n (h'/h) u`.
//! The scheme is a finite-volume method on the dual cells of
//! [`RadialGrid`]:
//!
//! - transport: explicit, first-order upwind on `W` ([`Parabolic::step_u`]),
//!   or backward Euler with the same upwind fluxes
//!   ([`Parabolic::step_u_implicit`]) once the density has concentrated so
//!   far that the explicit limit stalls the run;
//! - dilation: integrated exactly over the step, `u *= (h / h_next)^n`;
//! - diffusion `h^{-2} y^{1-n} (y^{n-1} u_y)_y`: backward Euler, tridiagonal;
//!   the origin face has zero area, which is the symmetry condition.
//!
//! At `y = 1` the Robin condition `u_y + k h u = 0` together with the
//! transport gives the outward flux `β u(1)`, `β = (k + v_r(h) - h') / h`.
//! It vanishes when `h'` follows the kinematic law, so the discrete mass
//! `h^n Σ V_j u_j` is then conserved to rounding.

use crate::elliptic::interpolate;
use crate::grid::RadialGrid;
use crate::params::Params;
use crate::state::{UState, VState};
use crate::tridiag;
use crate::{Error, Result};

/// Coefficients of one step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub h: f64,
    /// Radius at the end of the step; sets the dilation factor.
    pub h_next: f64,
    pub h_dot: f64,
    pub signal: &'a VState,
    /// `k(h, t)`.
    pub k_boundary: f64,
    pub dt: f64,
}

impl StepContext<'_> {
    fn vr(&self, r: f64) -> f64 {
        interpolate(&self.signal.r, &self.signal.vr, r)
    }

    /// Outward boundary flux coefficient `β`.
    pub fn boundary_outflow(&self) -> f64 {
        (self.k_boundary + self.vr(self.h) - self.h_dot) / self.h
    }
}

/// Density stepper bound to one grid.
#[derive(Debug, Clone)]
pub struct Parabolic {
    grid: RadialGrid,
    tol_mass: f64,
}

impl Parabolic {
    pub fn new(params: &Params) -> Self {
        Self {
            grid: RadialGrid::new(params.n, params.grid_n),
            tol_mass: params.tol_mass,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    fn face_velocities(&self, ctx: &StepContext) -> Vec<f64> {
        let h = ctx.h;
        self.grid
            .faces()
            .iter()
            .map(|&y| (ctx.vr(h * y) - ctx.h_dot * y) / h)
            .collect()
    }

    // max_j (interior outflow rate of cell j) / V_j; the y = 1 face is implicit
    // or inflow, so it never limits the step
    fn outflow_rate(&self, velocities: &[f64]) -> f64 {
        let areas = self.grid.face_areas();
        let vols = self.grid.volumes();
        let last = vols.len() - 1;
        let mut worst: f64 = 0.0;
        for (j, &vol) in vols.iter().enumerate() {
            let mut out = 0.0;
            if j < last && velocities[j] > 0.0 {
                out += areas[j] * velocities[j];
            }
            if j > 0 && velocities[j - 1] < 0.0 {
                out -= areas[j - 1] * velocities[j - 1];
            }
            worst = worst.max(out / vol);
        }
        worst
    }

    /// Explicit CFL number of the transport part for `ctx.dt`.
    pub fn cfl_number(&self, ctx: &StepContext) -> f64 {
        let w = self.face_velocities(ctx);
        ctx.dt * self.outflow_rate(&w)
    }

    /// Largest step keeping the transport CFL number at `cfl` and the relative
    /// radius change `|h'| dt / h` below `cfl Δy`.
    pub fn stable_dt(&self, h: f64, h_dot: f64, signal: &VState, k_boundary: f64, cfl: f64) -> f64 {
        self.transport_dt(h, h_dot, signal, k_boundary, cfl)
            .min(self.motion_dt(h, h_dot, cfl))
    }

    /// Step at which the explicit transport CFL number equals `cfl`.
    pub fn transport_dt(
        &self,
        h: f64,
        h_dot: f64,
        signal: &VState,
        k_boundary: f64,
        cfl: f64,
    ) -> f64 {
        let ctx = StepContext {
            h,
            h_next: h,
            h_dot,
            signal,
            k_boundary,
            dt: 1.0,
        };
        let rate = self.outflow_rate(&self.face_velocities(&ctx));
        if rate > 0.0 {
            cfl / rate
        } else {
            f64::INFINITY
        }
    }

    /// Step at which `|h'| dt / h = cfl Δy`.
    pub fn motion_dt(&self, h: f64, h_dot: f64, cfl: f64) -> f64 {
        if h_dot != 0.0 {
            cfl * self.grid.spacing() * h / h_dot.abs()
        } else {
            f64::INFINITY
        }
    }

    /// Advances `state` by `ctx.dt` with explicit transport.
    pub fn step_u(&self, state: &UState, ctx: &StepContext) -> Result<UState> {
        self.advance(state, ctx, false)
    }

    /// Advances `state` by `ctx.dt` with implicit upwind transport. Positive
    /// and conservative for any step.
    pub fn step_u_implicit(&self, state: &UState, ctx: &StepContext) -> Result<UState> {
        self.advance(state, ctx, true)
    }

    fn advance(&self, state: &UState, ctx: &StepContext, implicit: bool) -> Result<UState> {
        let grid = &self.grid;
        let n = grid.dim() as i32;
        let dt = ctx.dt;
        let dy = grid.spacing();
        let areas = grid.face_areas();
        let vols = grid.volumes();
        let m = vols.len();
        let last = m - 1;
        let u = &state.u;

        let w = self.face_velocities(ctx);
        let beta = ctx.boundary_outflow();
        if !implicit {
            let cfl = dt * self.outflow_rate(&w);
            if cfl > 1.0 {
                return Err(Error::CflViolation { cfl, dt });
            }
        }

        // transport in conserved form V_j u_j
        let mut rhs: Vec<f64> = vols.iter().zip(u).map(|(v, u)| v * u).collect();
        if !implicit {
            for f in 0..last {
                let upwind = if w[f] > 0.0 { u[f] } else { u[f + 1] };
                let flux = dt * areas[f] * w[f] * upwind;
                rhs[f] -= flux;
                rhs[f + 1] += flux;
            }
        }
        if beta < 0.0 {
            rhs[last] -= dt * beta * u[last];
        }

        let dilation = (ctx.h / ctx.h_next).powi(n);
        rhs.iter_mut().for_each(|x| *x *= dilation / dt);

        // backward Euler diffusion with coefficient 1/h_next^2
        let d = 1.0 / (ctx.h_next * ctx.h_next * dy);
        let mut lower = vec![0.0; m];
        let mut diag: Vec<f64> = vols.iter().map(|v| v / dt).collect();
        let mut upper = vec![0.0; m];
        for f in 0..last {
            let c = d * areas[f];
            diag[f] += c;
            diag[f + 1] += c;
            upper[f] = -c;
            lower[f + 1] = -c;
        }
        if beta >= 0.0 {
            diag[last] += beta;
        }
        if implicit {
            for f in 0..last {
                let out = dilation * areas[f] * w[f].max(0.0);
                let back = dilation * areas[f] * w[f].min(0.0);
                diag[f] += out;
                upper[f] += back;
                lower[f + 1] -= out;
                diag[f + 1] -= back;
            }
        }
        tridiag::solve(&lower, &diag, &upper, &mut rhs)?;

        let next = UState {
            h: ctx.h_next,
            t: state.t + dt,
            u: rhs,
        };
        let (min, max) = (next.u_min(), next.u_max());
        if min < -self.tol_mass * max {
            return Err(Error::NegativeDensity { min, max });
        }
        Ok(next)
    }

    /// Defect of the boundary flux balance
    /// `h^{n-1} [u_r - u v_r + u h']` at `r = h`, with `u_r = u_y / h` from a
    /// second-order one-sided difference. Zero for the continuum solution.
    pub fn boundary_flux_audit(&self, state: &UState, ctx: &StepContext) -> f64 {
        let u = &state.u;
        let last = u.len() - 1;
        let dy = self.grid.spacing();
        let u_y = (3.0 * u[last] - 4.0 * u[last - 1] + u[last - 2]) / (2.0 * dy);
        let h = ctx.h;
        let ub = u[last];
        h.powi(self.grid.dim() as i32 - 1) * (u_y / h - ub * ctx.vr(h) + ub * ctx.h_dot)
    }
}
