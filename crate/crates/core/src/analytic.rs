//! Closed-form results for `k(x, t) = a |x|`.
//!
//! Because the boundary gradient depends only on the conserved mass,
//! `v_r(h) = M h - M h^{1-n}`, the radius obeys the autonomous ODE
//! `h' = (a + M) h - M h^{1-n}`, which is linear in `s = h^n`:
//! `s' = n (a + M) s - n M`. Everything here follows from that.

use serde::Serialize;

use crate::params::sphere_area;
use crate::{Error, Result};

/// Long-time behaviour of the free boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime")]
pub enum Regime {
    /// `h` increases and reaches 1 at `fill_time`.
    Growing {
        fill_time: f64,
    },
    /// `h` decreases and reaches 0 at `collapse_time`.
    Shrinking {
        collapse_time: f64,
    },
    Stationary,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Growing { .. } => "Growing",
            Regime::Shrinking { .. } => "Shrinking",
            Regime::Stationary => "Stationary",
        }
    }

    pub fn event_time(&self) -> Option<f64> {
        match *self {
            Regime::Growing { fill_time } => Some(fill_time),
            Regime::Shrinking { collapse_time } => Some(collapse_time),
            Regime::Stationary => None,
        }
    }
}

/// `M_c = a b^n / (1 - b^n)`.
pub fn critical_mass(a: f64, b: f64, n: u32) -> f64 {
    let bn = b.powi(n as i32);
    a * bn / (1.0 - bn)
}

const STATIONARY_RTOL: f64 = 1e-12;

pub fn classify(a: f64, b: f64, n: u32, mass: f64) -> Regime {
    let mc = critical_mass(a, b, n);
    if (mass - mc).abs() <= STATIONARY_RTOL * mc {
        return Regime::Stationary;
    }
    let bn = b.powi(n as i32);
    let rate = n as f64 * (a + mass);
    if mass < mc {
        Regime::Growing {
            fill_time: (a / ((a + mass) * bn - mass)).ln() / rate,
        }
    } else {
        Regime::Shrinking {
            collapse_time: (mass / ((1.0 - bn) * mass - a * bn)).ln() / rate,
        }
    }
}

/// Right side of the decoupled radius ODE, `(a + M) h - M h^{1-n}`.
pub fn exact_rhs(h: f64, a: f64, n: u32, mass: f64) -> f64 {
    (a + mass) * h - mass * h.powi(1 - n as i32)
}

/// `h(t) = [(b^n - M/(a+M)) e^{n(a+M)t} + M/(a+M)]^{1/n}`, held at 1 after a
/// fill event.
pub fn h_exact(t: f64, a: f64, b: f64, n: u32, mass: f64) -> Result<f64> {
    let regime = classify(a, b, n, mass);
    match regime {
        Regime::Stationary => return Ok(b),
        Regime::Growing { fill_time } if t >= fill_time => return Ok(1.0),
        Regime::Shrinking { collapse_time } if t >= collapse_time => {
            return Err(Error::PastCollapse { t, collapse_time })
        }
        _ => {}
    }
    let nf = n as f64;
    let q = mass / (a + mass);
    let s = (b.powi(n as i32) - q) * (nf * (a + mass) * t).exp() + q;
    Ok(s.max(0.0).powf(1.0 / nf))
}

/// Weight of the Dirac limit at collapse, `(2 π^{n/2} / Γ(n/2)) M`.
pub fn collapse_profile_weight(n: u32, mass: f64) -> f64 {
    sphere_area(n) * mass
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_mass_examples() {
        assert!((critical_mass(1.0, 0.5, 3) - 1.0 / 7.0).abs() < 1e-15);
        assert!((critical_mass(1.0, 0.5, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(critical_mass(1.0, 1e-9, 2) < 1e-17);
    }

    #[test]
    fn classify_examples() {
        match classify(1.0, 0.5, 3, 1.0) {
            Regime::Shrinking { collapse_time } => {
                assert!((collapse_time - (4.0f64 / 3.0).ln() / 6.0).abs() < 1e-15);
                assert!((collapse_time - 0.0479472).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        match classify(1.0, 0.8, 2, 0.5) {
            Regime::Growing { fill_time } => {
                assert!((fill_time - (1.0f64 / 0.46).ln() / 3.0).abs() < 1e-14);
                assert!((fill_time - 0.25884).abs() < 1e-5);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(classify(1.0, 0.5, 2, 1.0 / 3.0), Regime::Stationary);
    }

    #[test]
    fn h_exact_examples() {
        assert_eq!(h_exact(0.0, 1.0, 0.5, 3, 1.0).unwrap(), 0.5);
        let tc = (4.0f64 / 3.0).ln() / 6.0;
        assert!(h_exact(tc * (1.0 - 1e-15), 1.0, 0.5, 3, 1.0).unwrap() < 1e-4);
        assert!(matches!(
            h_exact(tc, 1.0, 0.5, 3, 1.0),
            Err(Error::PastCollapse { .. })
        ));
        for t in [0.0, 1.0, 10.0] {
            assert_eq!(h_exact(t, 1.0, 0.5, 2, 1.0 / 3.0).unwrap(), 0.5);
        }
        assert_eq!(h_exact(1.0, 1.0, 0.8, 2, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn event_times_hit_the_ends() {
        let tf = classify(1.0, 0.8, 2, 0.5).event_time().unwrap();
        let q = 0.5 / 1.5;
        let s = (0.64 - q) * (2.0 * 1.5 * tf).exp() + q;
        assert!((s.sqrt() - 1.0).abs() < 1e-10);
        let tc = classify(1.0, 0.5, 3, 1.0).event_time().unwrap();
        let s = (0.125 - 0.5) * (6.0 * tc).exp() + 0.5;
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn collapse_weight_examples() {
        assert!((collapse_profile_weight(3, 1.0) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((collapse_profile_weight(2, 1.0) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert_eq!(collapse_profile_weight(3, 0.0), 0.0);
    }

    #[test]
    fn closed_form_solves_the_ode() {
        let (a, b, n, m) = (1.0, 0.5, 3, 1.0);
        let tc = classify(a, b, n, m).event_time().unwrap();
        for i in 1..=100 {
            let t = 0.9 * tc * i as f64 / 101.0;
            let eps = 1e-6 * tc;
            let d = (h_exact(t + eps, a, b, n, m).unwrap() - h_exact(t - eps, a, b, n, m).unwrap())
                / (2.0 * eps);
            let h = h_exact(t, a, b, n, m).unwrap();
            let rhs = exact_rhs(h, a, n, m);
            assert!((d - rhs).abs() <= 1e-6 * rhs.abs(), "t={t} d={d} rhs={rhs}");
        }
    }

    #[test]
    fn rhs_splits_into_k_plus_boundary_gradient() {
        for i in 1..50 {
            let h = i as f64 / 50.0;
            let (a, n, m) = (1.3, 3, 0.7);
            let split = a * h + (m * h - m * h.powi(1 - n as i32));
            assert!((exact_rhs(h, a, n, m) - split).abs() <= 1e-12 * split.abs().max(1.0));
        }
    }

    #[test]
    fn event_times_diverge_at_critical_mass() {
        // the divergence is logarithmic: t ~ ln(1/δ) / (n (a + M)) for
        // |M - M_c| = δ M_c
        let (a, b, n) = (1.0, 0.5, 3);
        let mc = critical_mass(a, b, n);
        let mut previous = [0.0, 0.0];
        for delta in [1e-2, 1e-4, 1e-6, 1e-8] {
            for (slot, m) in [mc * (1.0 - delta), mc * (1.0 + delta)]
                .into_iter()
                .enumerate()
            {
                let t = classify(a, b, n, m).event_time().unwrap();
                let scale = 1.0 / (n as f64 * (a + m));
                assert!(t > 0.9 * (1.0 / delta).ln() * scale, "m={m} t={t}");
                assert!(t > previous[slot]);
                previous[slot] = t;
            }
        }
    }
}
