use fbchemo::elliptic::{
    manufactured_error, manufactured_source, restrict_to_fixed_grid, solve_v, solve_v_fd, v_at,
};
use fbchemo::{UState, VState};
use proptest::prelude::*;

fn uniform(h: f64, n: u32, mass: f64, cells: usize) -> UState {
    UState {
        h,
        t: 0.0,
        u: vec![n as f64 * mass / h.powi(n as i32); cells + 1],
    }
}

fn max_gap(a: &VState, b: &VState, probes: &[f64]) -> f64 {
    probes
        .iter()
        .map(|&r| (v_at(a, r).unwrap() - v_at(b, r).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn quadrature_and_finite_differences_agree_at_second_order() {
    let probes: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    let gaps: Vec<f64> = [256, 512]
        .iter()
        .map(|&cells| {
            let src = restrict_to_fixed_grid(&uniform(0.5, 3, 1.0, cells), cells, 3, 3.0);
            max_gap(
                &solve_v(&src, 1e-4).unwrap(),
                &solve_v_fd(&src).unwrap(),
                &probes,
            )
        })
        .collect();
    let ratio = gaps[0] / gaps[1];
    assert!((3.0..=5.0).contains(&ratio), "gaps {gaps:?}");
}

#[test]
fn finite_differences_match_manufactured_solution() {
    for n in [2, 3, 4] {
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&cells| {
                manufactured_error(&solve_v_fd(&manufactured_source(n, cells)).unwrap(), n)
            })
            .collect();
        assert!((errs[1] / errs[2]).log2() >= 1.9, "n={n} {errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn any_positive_density_gives_mass_gradient(
        n in 2u32..5,
        h in 0.05f64..1.0,
        mass in 0.05f64..3.0,
        shape in prop::collection::vec(0.1f64..10.0, 33),
    ) {
        let cells = 32;
        let grid = fbchemo::grid::RadialGrid::new(n, cells);
        let raw = UState { h, t: 0.0, u: shape };
        let scale = mass / (h.powi(n as i32) * grid.moment(&raw.u));
        let st = UState { u: raw.u.iter().map(|u| u * scale).collect(), ..raw };
        let src = restrict_to_fixed_grid(&st, 64, n, n as f64 * mass);
        prop_assert!(src.raw_defect() < 1e-12);
        let v = solve_v(&src, 1e-6).unwrap();
        let vr_h = fbchemo::elliptic::vr_at(&v, h).unwrap();
        let far = mass * h.powi(1 - n as i32);
        prop_assert!((vr_h - (mass * h - far)).abs() <= 1e-10 * (1.0 + far));
        prop_assert_eq!(v.vr[0], 0.0);
        prop_assert!(v.vr.last().unwrap().abs() <= 1e-10 * (1.0 + far));
        let (mean, abs) = fbchemo::elliptic::weighted_mean(&v, n);
        prop_assert!(mean.abs() <= 1e-12 * abs.max(1.0));
    }
}
