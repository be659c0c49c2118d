use fbchemo::analytic::{classify, critical_mass, h_exact};
use fbchemo::simulation::simulate;
use fbchemo::{EventKind, KLaw, Params, Profile, Regime};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn initial_mass_is_linear_in_the_profile(
        n in 2u32..5,
        b in 0.1f64..0.9,
        peak in 0.1f64..20.0,
        floor in 0.01f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let p = Params { n, b, u0: Profile::Bump { peak, floor }, ..Params::default() };
        let q = Params { u0: p.u0.scaled(scale), ..p.clone() };
        let (m, ms) = (p.initial_mass(), q.initial_mass());
        prop_assert!((ms.mass - scale * m.mass).abs() <= 1e-12 * ms.mass);
        prop_assert!((m.c - n as f64 * m.mass).abs() <= 1e-15 * m.c);
    }

    #[test]
    fn closed_form_regimes_are_monotone(
        n in 2u32..5,
        b in 0.1f64..0.9,
        a in 0.1f64..5.0,
        factor in 0.2f64..5.0,
    ) {
        let mc = critical_mass(a, b, n);
        let mass = factor * mc;
        let regime = classify(a, b, n, mass);
        let te = regime.event_time().unwrap_or(1.0);
        let h1 = h_exact(0.25 * te, a, b, n, mass).unwrap();
        let h2 = h_exact(0.5 * te, a, b, n, mass).unwrap();
        match regime {
            Regime::Growing { .. } => prop_assert!(b < h1 && h1 < h2 && h2 <= 1.0),
            Regime::Shrinking { .. } => prop_assert!(b > h1 && h1 > h2 && h2 > 0.0),
            Regime::Stationary => prop_assert!(h1 == b && h2 == b),
        }
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn shrinking_eps_collapse_only_delays_the_event(eps in 2e-3f64..5e-2) {
        let base = Params {
            n: 3,
            b: 0.5,
            k_law: KLaw::Linear { a: 1.0 },
            u0: Profile::Constant { level: 24.0 },
            grid_n: 32,
            t_end: 0.1,
            ..Params::default()
        };
        let coarse = simulate(&Params { eps_collapse: eps, ..base.clone() }, &[]).unwrap();
        let fine = simulate(&Params { eps_collapse: 0.5 * eps, ..base }, &[]).unwrap();
        let (ce, fe) = (coarse.event.unwrap(), fine.event.unwrap());
        prop_assert_eq!(ce.kind, EventKind::Collapse);
        prop_assert_eq!(fe.kind, EventKind::Collapse);
        prop_assert!(fe.time >= ce.time);
    }
}
