//! Signal solve `0 = Δv + u - c` on the unit ball with `v_r(0) = v_r(1) = 0`
//! and zero ball-average.
//!
//! In radial form the equation has the first integral
//! `r^{n-1} v_r(r) = ∫_0^r ρ^{n-1} s(ρ) dρ` with `s = c - u`, which
//! [`solve_v`] evaluates by cumulative quadrature (`s` linear between nodes,
//! the weight `ρ^{n-1}` integrated exactly). [`solve_v_fd`]
//! solves the same problem with a conservative second-order
//! finite-difference system and serves as an independent check.

use crate::grid::RadialGrid;
use crate::quadrature::{cumulative_moment, cumulative_trapezoid, moment_weights};
use crate::state::{UState, VState};
use crate::tridiag;
use crate::{Error, Result};

/// Right-hand side `s = c - u` sampled at nondecreasing radii on `[0, 1]`.
///
/// A field sampled from a function carries nodal values only and is
/// integrated by the trapezoid rule. A field restricted from a density also
/// carries the cumulative flux `∫_0^r ρ^{n-1} s` at its nodes, computed
/// exactly for the cell-wise constant density of the finite-volume state, so
/// the signal sees the same mass the density update conserves. Inside the
/// occupied ball the nodes are the images `h y` of the cell faces; outside it
/// they are the fixed nodes `i / cells`, with a duplicated node at `r = h`
/// for the jump of `u` to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    n: u32,
    cells: usize,
    r: Vec<f64>,
    s: Vec<f64>,
    background: f64,
    correction: f64,
    raw_defect: f64,
    flux: Option<Vec<f64>>,
}

impl SourceField {
    /// Samples `f` on the uniform fixed grid and mean-corrects it.
    pub fn from_fn<F: Fn(f64) -> f64>(n: u32, cells: usize, f: F) -> Self {
        let r: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        let s = r.iter().map(|&x| f(x)).collect();
        Self::corrected(n, cells, r, s, 0.0)
    }

    fn corrected(n: u32, cells: usize, r: Vec<f64>, mut s: Vec<f64>, background: f64) -> Self {
        let w = moment_weights(&r, n - 1);
        let weight = |i: usize| w[i];
        let mut integral = 0.0;
        let mut absolute = 0.0;
        let mut volume = 0.0;
        for (i, &si) in s.iter().enumerate() {
            let wi = weight(i);
            integral += wi * si;
            absolute += wi * si.abs();
            volume += wi;
        }
        let raw_defect = if absolute > 0.0 {
            integral.abs() / absolute
        } else {
            0.0
        };
        let correction = -integral / volume;
        s.iter_mut().for_each(|x| *x += correction);
        Self {
            n,
            cells,
            r,
            s,
            background: background + correction,
            correction,
            raw_defect,
            flux: None,
        }
    }

    // Exact-flux variant: `absolute` is `∫ r^{n-1} |s|` before correction.
    fn corrected_flux(
        n: u32,
        cells: usize,
        r: Vec<f64>,
        mut s: Vec<f64>,
        mut flux: Vec<f64>,
        background: f64,
        absolute: f64,
    ) -> Self {
        let integral = *flux.last().expect("nonempty field");
        let raw_defect = if absolute > 0.0 {
            integral.abs() / absolute
        } else {
            0.0
        };
        let correction = -integral * n as f64;
        s.iter_mut().for_each(|x| *x += correction);
        for (f, &ri) in flux.iter_mut().zip(&r) {
            *f += correction * ri.powi(n as i32) / n as f64;
        }
        Self {
            n,
            cells,
            r,
            s,
            background: background + correction,
            correction,
            raw_defect,
            flux: Some(flux),
        }
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    /// Constant added to `s` to make the discrete compatibility integral vanish.
    pub fn correction(&self) -> f64 {
        self.correction
    }

    /// `c` after correction.
    pub fn background(&self) -> f64 {
        self.background
    }

    /// `|∫ r^{n-1} s| / ∫ r^{n-1} |s|` before correction.
    pub fn raw_defect(&self) -> f64 {
        self.raw_defect
    }

    /// `∫ r^{n-1} s` after correction; zero up to rounding.
    pub fn compatibility_integral(&self) -> f64 {
        if let Some(flux) = &self.flux {
            return *flux.last().expect("nonempty field");
        }
        let w = moment_weights(&self.r, self.n - 1);
        w.iter().zip(&self.s).map(|(w, s)| w * s).sum()
    }

    /// Linear interpolation; at a duplicated node the two one-sided values
    /// are averaged.
    pub fn value_at(&self, x: f64) -> f64 {
        let r = &self.r;
        let i = r.partition_point(|&v| v < x);
        if i >= r.len() {
            return self.s[r.len() - 1];
        }
        if r[i] == x {
            let mut j = i;
            while j + 1 < r.len() && r[j + 1] == x {
                j += 1;
            }
            return 0.5 * (self.s[i] + self.s[j]);
        }
        if i == 0 {
            return self.s[0];
        }
        let w = (x - r[i - 1]) / (r[i] - r[i - 1]);
        self.s[i - 1] * (1.0 - w) + self.s[i] * w
    }
}

/// Maps the moving-grid density onto the unit ball (`u = 0` for `r > h`) and
/// forms `s = c - u`, mean-corrected so the compatibility integral is exactly
/// zero.
pub fn restrict_to_fixed_grid(state: &UState, cells: usize, n: u32, c: f64) -> SourceField {
    let h = state.h;
    let u = &state.u;
    let grid = RadialGrid::new(n, u.len() - 1);
    let ni = n as i32;
    let nf = n as f64;
    let hn = h.powi(ni);
    let ball = |r: f64| c * r.powi(ni) / nf;

    let mut r = Vec::with_capacity(2 * u.len() + cells + 3);
    let mut s = Vec::with_capacity(r.capacity());
    let mut flux = Vec::with_capacity(r.capacity());
    r.push(0.0);
    s.push(c - u[0]);
    flux.push(0.0);
    let mut mass = 0.0;
    let mut absolute = 0.0;
    for (j, &face) in grid.faces().iter().enumerate() {
        let vol = hn * grid.volumes()[j];
        mass += vol * u[j];
        absolute += vol * (c - u[j]).abs();
        let rf = h * face;
        r.push(rf);
        s.push(c - 0.5 * (u[j] + u[j + 1]));
        flux.push(ball(rf) - mass);
    }
    let last = u.len() - 1;
    let vol = hn * grid.volumes()[last];
    mass += vol * u[last];
    absolute += vol * (c - u[last]).abs();
    r.push(h);
    s.push(c - u[last]);
    flux.push(ball(h) - mass);
    if h < 1.0 {
        absolute += c.abs() * (1.0 - hn) / nf;
        r.push(h);
        s.push(c);
        flux.push(ball(h) - mass);
        for i in 0..=cells {
            let ri = i as f64 / cells as f64;
            if ri > h {
                r.push(ri);
                s.push(c);
                flux.push(ball(ri) - mass);
            }
        }
    }
    SourceField::corrected_flux(n, cells, r, s, flux, c, absolute)
}

/// Quadrature solve: `vr = r^{1-n} ∫_0^r ρ^{n-1} s`, `v = ∫_0^r vr`, then a
/// constant shift to zero mean.
pub fn solve_v(src: &SourceField, tol_elliptic: f64) -> Result<VState> {
    let limit = 10.0 * tol_elliptic;
    if src.raw_defect > limit {
        return Err(Error::IncompatibleSource {
            defect: src.raw_defect,
            limit,
        });
    }
    let n = src.n as i32;
    let r = &src.r;
    let flux = match &src.flux {
        Some(flux) => flux.clone(),
        None => cumulative_moment(r, &src.s, src.n - 1),
    };
    let vr: Vec<f64> = r
        .iter()
        .zip(&flux)
        .map(|(&r, &f)| if r > 0.0 { f / r.powi(n - 1) } else { 0.0 })
        .collect();
    let mut v = cumulative_trapezoid(r, &vr);
    remove_mean(r, &mut v, src.n);
    Ok(VState {
        r: r.clone(),
        v,
        vr,
    })
}

/// Finite-difference solve of `(r^{n-1} v_r)_r = r^{n-1} s` on the uniform
/// fixed grid (dual-cell volumes, ghost-free Neumann closure). The singular
/// gauge is fixed by pinning `v(0) = 0`, then shifting to zero mean. The
/// nodal source is first made compatible for the finite-volume sums.
pub fn solve_v_fd(src: &SourceField) -> Result<VState> {
    let cells = src.cells;
    let grid = RadialGrid::new(src.n, cells);
    let dr = grid.spacing();
    let nodes = grid.nodes().to_vec();
    let m = nodes.len();
    let areas = grid.face_areas();
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let left = if i > 0 { areas[i - 1] / dr } else { 0.0 };
        let right = if i < m - 1 { areas[i] / dr } else { 0.0 };
        lower[i] = -left;
        upper[i] = -right;
        diag[i] = left + right;
        rhs[i] = -grid.volumes()[i] * src.value_at(nodes[i]);
    }
    // discrete compatibility, so dropping the origin row loses nothing
    let defect = rhs.iter().sum::<f64>() / grid.volumes().iter().sum::<f64>();
    for (r, vol) in rhs.iter_mut().zip(grid.volumes()) {
        *r -= vol * defect;
    }
    diag[0] = 1.0;
    upper[0] = 0.0;
    rhs[0] = 0.0;
    tridiag::solve(&lower, &diag, &upper, &mut rhs)?;
    let mut v = rhs;
    remove_mean(&nodes, &mut v, src.n);
    let mut vr = vec![0.0; m];
    for i in 1..m - 1 {
        vr[i] = (v[i + 1] - v[i - 1]) / (2.0 * dr);
    }
    Ok(VState { r: nodes, v, vr })
}

/// Linear interpolation of `vr` at radius `r`.
pub fn vr_at(state: &VState, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfDomain(r));
    }
    Ok(interpolate(&state.r, &state.vr, r))
}

/// Linear interpolation of `v` at radius `r`.
pub fn v_at(state: &VState, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfDomain(r));
    }
    Ok(interpolate(&state.r, &state.v, r))
}

/// `∫ r^{n-1} v` for piecewise-linear `v`, and the matching normalization
/// `Σ w_i |v_i|`.
pub fn weighted_mean(state: &VState, n: u32) -> (f64, f64) {
    let w = moment_weights(&state.r, n - 1);
    let mut total = 0.0;
    let mut abs = 0.0;
    for (w, v) in w.iter().zip(&state.v) {
        total += w * v;
        abs += w * v.abs();
    }
    (total, abs)
}

fn remove_mean(r: &[f64], v: &mut [f64], n: u32) {
    let w = moment_weights(r, n - 1);
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, v) in w.iter().zip(v.iter()) {
        num += w * v;
        den += w;
    }
    let mean = num / den;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Manufactured signal `v* = cos(π r)` and its source `s* = Δv*`.
pub fn manufactured_source(n: u32, cells: usize) -> SourceField {
    use std::f64::consts::PI;
    let nf = n as f64;
    SourceField::from_fn(n, cells, |r| {
        if r == 0.0 {
            -nf * PI * PI
        } else {
            -PI * PI * (PI * r).cos() - (nf - 1.0) * PI * (PI * r).sin() / r
        }
    })
}

/// Max-norm error of `v` against `v* = cos(π r)` shifted to the same discrete
/// zero mean.
pub fn manufactured_error(v: &VState, n: u32) -> f64 {
    let mut exact: Vec<f64> =
        v.r.iter()
            .map(|r| (std::f64::consts::PI * r).cos())
            .collect();
    remove_mean(&v.r, &mut exact, n);
    exact
        .iter()
        .zip(&v.v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn interpolate(x: &[f64], f: &[f64], t: f64) -> f64 {
    let i = x.partition_point(|&v| v < t);
    if i == 0 {
        return f[0];
    }
    if i >= x.len() {
        return f[x.len() - 1];
    }
    let span = x[i] - x[i - 1];
    if span == 0.0 {
        return f[i];
    }
    let w = (t - x[i - 1]) / span;
    f[i - 1] * (1.0 - w) + f[i] * w
}
