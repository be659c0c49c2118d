//! Problem parameters, validation and the conserved initial mass.

use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Boundary coefficient `k(r, t)` in the Robin condition and the radius ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KLaw {
    /// `k(x, t) = a |x|`.
    Linear {
        a: f64,
    },
    Tabulated(KTable),
}

/// `k` sampled on a tensor grid of radii and times, bilinearly interpolated
/// and clamped outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KTable {
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    /// Row-major by time: `values[it * radii.len() + ir]`.
    pub values: Vec<f64>,
    pub lipschitz: f64,
    pub bound: f64,
}

impl KTable {
    /// A table that is constant in `r` with a single time row.
    pub fn constant(value: f64) -> Self {
        Self {
            radii: vec![0.0, 1.0],
            times: vec![0.0],
            values: vec![value, value],
            lipschitz: 0.0,
            bound: value.abs(),
        }
    }

    fn eval(&self, r: f64, t: f64) -> f64 {
        let nr = self.radii.len();
        let (it0, it1, wt) = bracket(&self.times, t);
        let (ir0, ir1, wr) = bracket(&self.radii, r);
        let at = |it: usize, ir: usize| self.values[it * nr + ir];
        let row0 = at(it0, ir0) * (1.0 - wr) + at(it0, ir1) * wr;
        let row1 = at(it1, ir0) * (1.0 - wr) + at(it1, ir1) * wr;
        row0 * (1.0 - wt) + row1 * wt
    }

    fn check(&self) -> Result<()> {
        let nr = self.radii.len();
        let nt = self.times.len();
        let fail = |detail: String| Err(Error::RejectsLipschitz { detail });
        if nr == 0 || nt == 0 || self.values.len() != nr * nt {
            return fail(format!(
                "table shape {}x{} does not match {} values",
                nt,
                nr,
                self.values.len()
            ));
        }
        if !is_increasing(&self.radii) || !is_increasing(&self.times) {
            return fail("table abscissae must be strictly increasing".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return fail("table holds non-finite values".into());
        }
        if let Some(v) = self.values.iter().find(|v| v.abs() > self.bound) {
            return fail(format!(
                "|k| = {} exceeds declared bound C = {}",
                v.abs(),
                self.bound
            ));
        }
        // spot-check the r-Lipschitz bound on a sample grid at every tabulated time
        let samples = 257;
        let slack = 1.0 + 1e-9;
        for &t in &self.times {
            let mut prev = self.eval(0.0, t);
            for i in 1..samples {
                let r0 = (i - 1) as f64 / (samples - 1) as f64;
                let r1 = i as f64 / (samples - 1) as f64;
                let cur = self.eval(r1, t);
                if (cur - prev).abs() > self.lipschitz * (r1 - r0) * slack + 1e-14 {
                    return fail(format!(
                        "|k({r1}, {t}) - k({r0}, {t})| = {} > L |dr| with L = {}",
                        (cur - prev).abs(),
                        self.lipschitz
                    ));
                }
                prev = cur;
            }
        }
        Ok(())
    }
}

impl KLaw {
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        match self {
            KLaw::Linear { a } => a * r.abs(),
            KLaw::Tabulated(table) => table.eval(r, t),
        }
    }

    /// The slope `a` when the law is `a |x|`.
    pub fn linear_rate(&self) -> Option<f64> {
        match self {
            KLaw::Linear { a } => Some(*a),
            KLaw::Tabulated(_) => None,
        }
    }

    fn sup_bound(&self) -> f64 {
        match self {
            KLaw::Linear { a } => a.abs(),
            KLaw::Tabulated(table) => table.bound,
        }
    }
}

/// Initial radial density on `[0, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        level: f64,
    },
    /// `peak (1 - (r/b)^2) + floor`.
    Bump {
        peak: f64,
        floor: f64,
    },
    /// Piecewise linear through `(radii, values)`, clamped at the ends.
    Table {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Profile {
    pub fn eval(&self, r: f64, b: f64) -> f64 {
        match self {
            Profile::Constant { level } => *level,
            Profile::Bump { peak, floor } => {
                let s = r / b;
                peak * (1.0 - s * s) + floor
            }
            Profile::Table { radii, values } => {
                let (i0, i1, w) = bracket(radii, r);
                values[i0] * (1.0 - w) + values[i1] * w
            }
        }
    }

    /// The same shape multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Profile {
        match self {
            Profile::Constant { level } => Profile::Constant {
                level: level * factor,
            },
            Profile::Bump { peak, floor } => Profile::Bump {
                peak: peak * factor,
                floor: floor * factor,
            },
            Profile::Table { radii, values } => Profile::Table {
                radii: radii.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    fn breakpoints(&self, b: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        if let Profile::Table { radii, .. } = self {
            pts.extend(radii.iter().copied().filter(|&r| r > 0.0 && r < b));
        }
        pts.push(b);
        pts
    }
}

/// Time step request; validation resolves `Auto` to a concrete cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    Auto,
}

impl TimeStep {
    pub fn value(&self) -> Option<f64> {
        match self {
            TimeStep::Fixed(dt) => Some(*dt),
            TimeStep::Auto => None,
        }
    }
}

impl Serialize for TimeStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimeStep::Fixed(dt) => s.serialize_f64(*dt),
            TimeStep::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for TimeStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(dt) => Ok(TimeStep::Fixed(dt)),
            Raw::Text(s) if s.eq_ignore_ascii_case("auto") => Ok(TimeStep::Auto),
            Raw::Text(s) => s.parse::<f64>().map(TimeStep::Fixed).map_err(|_| {
                serde::de::Error::custom(format!("dt must be a number or \"auto\", got {s:?}"))
            }),
        }
    }
}

/// Full problem specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: u32,
    pub b: f64,
    pub k_law: KLaw,
    pub u0: Profile,
    pub grid_n: usize,
    pub dt: TimeStep,
    pub t_end: f64,
    pub tol_mass: f64,
    pub tol_elliptic: f64,
    pub tol_picard: f64,
    pub eps_collapse: f64,
    pub eps_fill: f64,
    /// Target explicit CFL number for adaptive step limiting.
    pub cfl: f64,
    /// Elliptic re-solves per time step (1 = plain first-order splitting).
    pub coupling_subiters: usize,
    /// Rescale `u` to the initial mass after every step.
    pub renormalize_mass: bool,
    pub max_picard_iter: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n: 3,
            b: 0.5,
            k_law: KLaw::Linear { a: 1.0 },
            u0: Profile::Constant { level: 24.0 },
            grid_n: 256,
            dt: TimeStep::Auto,
            t_end: 0.1,
            tol_mass: 1e-6,
            tol_elliptic: 1e-4,
            tol_picard: 1e-8,
            eps_collapse: 1e-3,
            eps_fill: 1e-3,
            cfl: 0.4,
            coupling_subiters: 1,
            renormalize_mass: false,
            max_picard_iter: 50,
        }
    }
}

/// `M = ∫_0^b r^{n-1} u0(r) dr` and the signal background `c = n M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialMass {
    pub mass: f64,
    pub c: f64,
}

impl InitialMass {
    /// `∫_{B_b} u0 dx = |S^{n-1}| M`.
    pub fn ambient(&self, n: u32) -> f64 {
        sphere_area(n) * self.mass
    }
}

/// Surface area of the unit sphere in R^n, `2 π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / libm::tgamma(half)
}

const MASS_GL_ORDER: usize = 12;
const MASS_GL_PANELS: usize = 32;

/// High-order quadrature of `r^{n-1} u0(r)` over `[0, b]`.
pub fn initial_mass(params: &Params) -> InitialMass {
    initial_mass_with(params, MASS_GL_PANELS)
}

pub(crate) fn initial_mass_with(params: &Params, panels: usize) -> InitialMass {
    let gl = GaussLegendre::new(MASS_GL_ORDER);
    let n = params.n as i32;
    let b = params.b;
    let pts = params.u0.breakpoints(b);
    let mass: f64 = pts
        .windows(2)
        .map(|w| gl.integrate(|r| r.powi(n - 1) * params.u0.eval(r, b), w[0], w[1], panels))
        .sum();
    InitialMass {
        mass,
        c: params.n as f64 * mass,
    }
}

impl Params {
    pub fn spacing(&self) -> f64 {
        1.0 / self.grid_n as f64
    }

    pub fn initial_mass(&self) -> InitialMass {
        initial_mass(self)
    }

    /// Checks every invariant and resolves `dt = Auto`.
    pub fn validate(mut self) -> Result<Params> {
        if self.n < 2 {
            return Err(Error::RejectsDimension(self.n));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(Error::RejectsRadius(self.b));
        }
        match &self.k_law {
            KLaw::Linear { a } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "k rate a = {a} must be positive"
                    )));
                }
            }
            KLaw::Tabulated(table) => table.check()?,
        }
        self.check_profile()?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be positive"
                )))
            }
        };
        if self.grid_n < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid_n = {} must be at least 16",
                self.grid_n
            )));
        }
        positive("t_end", self.t_end)?;
        positive("tol_mass", self.tol_mass)?;
        positive("tol_elliptic", self.tol_elliptic)?;
        positive("tol_picard", self.tol_picard)?;
        positive("eps_collapse", self.eps_collapse)?;
        positive("eps_fill", self.eps_fill)?;
        positive("cfl", self.cfl)?;
        if self.cfl > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "cfl = {} must not exceed 1",
                self.cfl
            )));
        }
        if self.eps_collapse >= self.b || self.eps_fill >= 1.0 - self.b {
            return Err(Error::InvalidParameter(
                "event thresholds must lie strictly between 0, b and 1".into(),
            ));
        }
        if self.coupling_subiters == 0 || self.max_picard_iter == 0 {
            return Err(Error::InvalidParameter(
                "coupling_subiters and max_picard_iter must be positive".into(),
            ));
        }
        match self.dt {
            TimeStep::Fixed(dt) => positive("dt", dt)?,
            TimeStep::Auto => self.dt = TimeStep::Fixed(self.auto_dt()),
        }
        Ok(self)
    }

    fn check_profile(&self) -> Result<()> {
        if let Profile::Table { radii, values } = &self.u0 {
            if radii.is_empty() || radii.len() != values.len() || !is_increasing(radii) {
                return Err(Error::InvalidParameter(
                    "u0 table needs matching, strictly increasing radii".into(),
                ));
            }
        }
        let samples = 1025;
        let mut pts: Vec<f64> = (0..samples)
            .map(|i| self.b * i as f64 / (samples - 1) as f64)
            .collect();
        if let Profile::Table { radii, .. } = &self.u0 {
            pts.extend(
                radii
                    .iter()
                    .copied()
                    .filter(|&r| (0.0..=self.b).contains(&r)),
            );
        }
        for r in pts {
            let value = self.u0.eval(r, self.b);
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::RejectsNonPositiveProfile { r, value });
            }
        }
        Ok(())
    }

    /// `0.25 min(Δy² b², Δy / |w|)` with `|w|` a bound on the initial
    /// front-fixed drift speed.
    fn auto_dt(&self) -> f64 {
        let dy = self.spacing();
        let b = self.b;
        let m = self.initial_mass().mass;
        let k = self.k_law.sup_bound().max(self.k_law.eval(b, 0.0).abs());
        let w = 2.0 * (k + m * (b + b.powi(1 - self.n as i32))) / b;
        0.25 * (dy * dy * b * b).min(dy / w.max(f64::MIN_POSITIVE))
    }

    /// The resolved step; panics on unvalidated `Auto`.
    pub fn dt_value(&self) -> f64 {
        self.dt
            .value()
            .expect("dt must be resolved by Params::validate")
    }
}

fn is_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0])
}

// (lo, hi, weight of hi) for linear interpolation with clamping
fn bracket(x: &[f64], t: f64) -> (usize, usize, f64) {
    let n = x.len();
    if n == 1 || t <= x[0] {
        return (0, 0, 0.0);
    }
    if t >= x[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = x.partition_point(|&v| v <= t);
    let lo = hi - 1;
    (lo, hi, (t - x[lo]) / (x[hi] - x[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Params {
        Params {
            n: 3,
            b: 0.5,
            u0: Profile::Constant { level: 24.0 },
            grid_n: 256,
            ..Params::default()
        }
    }

    #[test]
    fn validates_reference_problem_and_resolves_auto_dt() {
        let p = base().validate().unwrap();
        let dt = p.dt_value();
        assert!(dt > 0.0 && dt < 1e-5);
    }

    #[test]
    fn rejects_bad_radius_dimension_profile() {
        assert_eq!(
            Params { b: 1.2, ..base() }.validate(),
            Err(Error::RejectsRadius(1.2))
        );
        assert_eq!(
            Params { b: 0.0, ..base() }.validate(),
            Err(Error::RejectsRadius(0.0))
        );
        assert_eq!(
            Params { n: 1, ..base() }.validate(),
            Err(Error::RejectsDimension(1))
        );
        let bad = Params {
            u0: Profile::Bump {
                peak: 1.0,
                floor: 0.0,
            },
            ..base()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::RejectsNonPositiveProfile { .. })
        ));
        let table = Params {
            u0: Profile::Table {
                radii: vec![0.0, 0.3, 0.5],
                values: vec![1.0, -0.1, 1.0],
            },
            ..base()
        };
        assert!(matches!(
            table.validate(),
            Err(Error::RejectsNonPositiveProfile { .. })
        ));
    }

    #[test]
    fn rejects_tabulated_k_breaking_lipschitz() {
        let table = KTable {
            radii: vec![0.0, 0.5, 1.0],
            times: vec![0.0],
            values: vec![0.0, 1.0, 1.0],
            lipschitz: 1.0,
            bound: 2.0,
        };
        let p = Params {
            k_law: KLaw::Tabulated(table.clone()),
            ..base()
        };
        assert!(matches!(p.validate(), Err(Error::RejectsLipschitz { .. })));
        let ok = Params {
            k_law: KLaw::Tabulated(KTable {
                lipschitz: 2.0,
                ..table.clone()
            }),
            ..base()
        };
        assert!(ok.validate().is_ok());
        let unbounded = Params {
            k_law: KLaw::Tabulated(KTable {
                lipschitz: 2.0,
                bound: 0.5,
                ..table
            }),
            ..base()
        };
        assert!(matches!(
            unbounded.validate(),
            Err(Error::RejectsLipschitz { .. })
        ));
    }

    #[test]
    fn tabulated_k_interpolates_bilinearly() {
        let t = KTable {
            radii: vec![0.0, 1.0],
            times: vec![0.0, 1.0],
            values: vec![0.0, 1.0, 2.0, 3.0],
            lipschitz: 1.0,
            bound: 3.0,
        };
        let k = KLaw::Tabulated(t);
        assert!((k.eval(0.5, 0.5) - 1.5).abs() < 1e-15);
        assert!((k.eval(2.0, 5.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn initial_mass_examples() {
        // u_c b^3 / 3 with u_c = 24, b = 0.5
        let m = initial_mass(&base());
        assert!((m.mass - 1.0).abs() < 1e-14);
        assert!((m.c - 3.0).abs() < 1e-13);

        let zero = Params {
            n: 2,
            u0: Profile::Constant { level: 0.0 },
            ..base()
        };
        assert_eq!(initial_mass(&zero).mass, 0.0);

        // u_c b^2 / 2 with u_c = 2 / b^2
        let p = Params {
            n: 2,
            b: 0.9,
            u0: Profile::Constant { level: 2.0 / 0.81 },
            ..base()
        };
        assert!((initial_mass(&p).mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn initial_mass_of_bump_matches_closed_form() {
        // ∫_0^b r^2 (P (1 - r²/b²) + F) dr = P (b³/3 - b³/5) + F b³/3
        let p = Params {
            u0: Profile::Bump {
                peak: 10.0,
                floor: 1.0,
            },
            ..base()
        };
        let b3 = 0.125;
        let exact = 10.0 * (b3 / 3.0 - b3 / 5.0) + b3 / 3.0;
        assert!((initial_mass(&p).mass - exact).abs() < 1e-14);
    }

    #[test]
    fn quadrature_resolution_doubling_is_stable() {
        let p = Params {
            u0: Profile::Table {
                radii: vec![0.0, 0.1, 0.37, 0.5],
                values: vec![3.0, 2.0, 5.0, 1.0],
            },
            ..base()
        };
        let a = initial_mass_with(&p, 16).mass;
        let b = initial_mass_with(&p, 32).mass;
        assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn sphere_area_low_dimensions() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }
}
