use serde::Serialize;

use crate::grid::RadialGrid;
use crate::params::Params;

/// Cell density on the front-fixed grid `y_j = j / grid_n`, together with the
/// current radius `h` and time `t`. Physical radius of node `j` is `h y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct UState {
    pub h: f64,
    pub t: f64,
    pub u: Vec<f64>,
}

impl UState {
    /// Samples `u0(b y_j)` and rescales the nodal values so the discrete mass
    /// equals `mass` exactly.
    pub fn initial(params: &Params, grid: &RadialGrid, mass: f64) -> Self {
        let b = params.b;
        let mut u: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&y| params.u0.eval(b * y, b))
            .collect();
        let discrete = b.powi(params.n as i32) * grid.moment(&u);
        if discrete > 0.0 {
            let factor = mass / discrete;
            u.iter_mut().for_each(|x| *x *= factor);
        }
        Self { h: b, t: 0.0, u }
    }

    pub fn u_max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn u_min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Physical radii `h y_j` and values, for profile snapshots.
    pub fn radial_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let cells = (self.u.len() - 1) as f64;
        let r = (0..self.u.len())
            .map(|j| self.h * j as f64 / cells)
            .collect();
        (r, self.u.clone())
    }
}

/// Signal on the unit ball: nodes `r` (nondecreasing, starting at 0 and ending
/// at 1), the zero-mean potential `v` and its radial derivative `vr`.
#[derive(Debug, Clone, PartialEq)]
pub struct VState {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub vr: Vec<f64>,
}

/// A sampled trajectory `h(t)` together with its declared Lipschitz bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub m0: f64,
}

impl BoundaryCurve {
    pub fn constant(times: Vec<f64>, value: f64, m0: f64) -> Self {
        let values = vec![value; times.len()];
        Self { times, values, m0 }
    }

    /// Linear interpolation, clamped to the sampled range.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.times.partition_point(|&s| s <= t);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        self.values[lo] * (1.0 - w) + self.values[hi] * w
    }

    /// `max_i |self_i - other_i|` on a shared sampling.
    pub fn sup_distance(&self, other: &BoundaryCurve) -> f64 {
        debug_assert_eq!(self.times.len(), other.times.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-step diagnostics row. Column order is the CSV schema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRecord {
    pub t: f64,
    pub h: f64,
    pub mass: f64,
    pub u_max: f64,
    pub vr_h: f64,
    pub elliptic_residual: f64,
    pub mass_drift: f64,
}

impl RunRecord {
    pub const HEADER: &'static str = "t,h,mass,u_max,vr_h,elliptic_residual,mass_drift";

    pub fn fields(&self) -> [f64; 7] {
        [
            self.t,
            self.h,
            self.mass,
            self.u_max,
            self.vr_h,
            self.elliptic_residual,
            self.mass_drift,
        ]
    }
}
