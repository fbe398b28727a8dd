mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use common::*;
use proptest::prelude::*;
use sdc_core::drift::{solve_transfer, solve_transfer_detailed, DriftBounds, Propulsion};
use sdc_core::impulsive::{hohmann_impulses, hohmann_split, impulsive_leg, impulsive_leg_dv};
use sdc_core::lowthrust::{
    edelbaum_profile, edelbaum_solve, lowthrust_leg_dv, raan_drift_along_profile, LowThrustConfig,
};
use sdc_core::numeric::golden_section;
use sdc_core::orbit::{angle_diff, circular_velocity, fuel_consumed, propagate_raan, raan_rate, CircularOrbit, DAY};

fn radius() -> impl Strategy<Value = f64> {
    (400e3..2000e3f64).prop_map(|h| E.radius + h)
}

fn inclination() -> impl Strategy<Value = f64> {
    (0.0..180.0f64).prop_map(f64::to_radians)
}

fn sso_inclination() -> impl Strategy<Value = f64> {
    (96.0..100.0f64).prop_map(f64::to_radians)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn precession_is_antisymmetric_about_polar(a in radius(), i in inclination()) {
        let (p, q) = (raan_rate(a, i, &E), raan_rate(a, PI - i, &E));
        prop_assert!((p + q).abs() <= 1e-12 * p.abs().max(1e-20));
    }

    #[test]
    fn precession_weakens_with_altitude(a in radius(), da in 1e3..500e3f64, i in inclination()) {
        prop_assume!((i - PI / 2.0).abs() > 1e-3);
        prop_assert!(raan_rate(a + da, i, &E).abs() < raan_rate(a, i, &E).abs());
    }

    #[test]
    fn propagation_is_additive(a in radius(), i in inclination(), raan in 0.0..std::f64::consts::TAU, t1 in 0.0..2000.0f64, t2 in 0.0..2000.0f64) {
        let o = CircularOrbit::new(a, i, raan, 0.0, &E).unwrap();
        let once = propagate_raan(&o, (t1 + t2) * DAY, &E);
        let mid = CircularOrbit::new(a, i, propagate_raan(&o, t1 * DAY, &E), t1 * DAY, &E).unwrap();
        let twice = propagate_raan(&mid, (t1 + t2) * DAY, &E);
        prop_assert!(angle_diff(once, twice).abs() < 1e-9);
    }

    #[test]
    fn fuel_is_monotone_and_homogeneous(m in 10.0..5000.0f64, dv in 0.0..3000.0f64, extra in 1e-3..500.0f64, ve in 1000.0..40000.0f64, scale in 0.1..10.0f64) {
        let f = fuel_consumed(m, dv, ve).unwrap();
        prop_assert!(fuel_consumed(m, dv + extra, ve).unwrap() > f);
        assert_relative_eq!(fuel_consumed(scale * m, dv, ve).unwrap(), scale * f, max_relative = 1e-12);
    }

    #[test]
    fn split_is_close_to_the_true_minimum(r1 in radius(), r2 in radius(), i1 in sso_inclination(), di in -5.0..5.0f64) {
        let i2 = i1 + di.to_radians();
        let split = hohmann_split(r1, i1, r2, i2, &E).total();
        let (_, best) = golden_section(|s| hohmann_impulses(r1, i1, r2, i2, s, &E).total(), 0.0, 1.0, 1e-9);
        // the squared-sum rule is at most ~1.2 m/s off at a 5 deg plane change
        prop_assert!(split - best < 1.25, "split {split} vs minimum {best}");
        if di.abs() <= 4.0 {
            prop_assert!(split - best < 1.0, "split {split} vs minimum {best}");
        }
        prop_assert!(split >= best - 1e-6);
    }

    #[test]
    fn impulsive_leg_is_reversible(r1 in radius(), i1 in sso_inclination(), ad in radius(), id in sso_inclination(), r2 in radius(), i2 in sso_inclination()) {
        let a = CircularOrbit::new(r1, i1, 0.0, 0.0, &E).unwrap();
        let b = CircularOrbit::new(r2, i2, 1.0, 0.0, &E).unwrap();
        let forth = impulsive_leg(&a, (ad, id), &b, &E).total_dv;
        let back = impulsive_leg(&b, (ad, id), &a, &E).total_dv;
        assert_relative_eq!(forth, back, max_relative = 1e-12);
    }

    #[test]
    fn plane_change_never_cheapens_a_transfer(r1 in radius(), r2 in radius(), i1 in sso_inclination(), di in 0.0..10.0f64, more in 0.0..5.0f64) {
        let small = hohmann_split(r1, i1, r2, i1 + di.to_radians(), &E).total();
        let large = hohmann_split(r1, i1, r2, i1 + (di + more).to_radians(), &E).total();
        prop_assert!(large >= small - 1e-9);
    }

    #[test]
    fn edelbaum_is_symmetric_and_bounded(v0 in 6000.0..8000.0f64, vf in 6000.0..8000.0f64, di in -0.2..0.2f64, f in 1e-4..1e-2f64) {
        let s = edelbaum_solve(v0, vf, di, f).unwrap();
        assert_relative_eq!(s.dv, edelbaum_solve(vf, v0, di, f).unwrap().dv, max_relative = 1e-12);
        prop_assert!(s.dv >= (v0 - vf).abs());
        if di == 0.0 {
            prop_assert!((s.dv - (v0 - vf).abs()).abs() < 1e-9);
        } else {
            prop_assert!(s.dv > (v0 - vf).abs());
        }
        prop_assert!(edelbaum_solve(v0, vf, di.abs() + 1e-3, f).unwrap().dv > edelbaum_solve(v0, vf, di.abs(), f).unwrap().dv);
    }

    #[test]
    fn low_thrust_pays_a_steering_penalty(r1 in radius(), i1 in sso_inclination(), ad in radius(), id in sso_inclination(), r2 in radius(), i2 in sso_inclination()) {
        let lt = lowthrust_leg_dv(r1, i1, (ad, id), r2, i2, &E);
        let hi = impulsive_leg_dv(r1, i1, (ad, id), r2, i2, &E);
        prop_assert!(lt >= hi - 1e-9, "low thrust {lt} below impulsive {hi}");
    }

    #[test]
    fn node_drift_converges_at_first_order(r1 in radius(), i1 in sso_inclination(), r2 in radius(), i2 in sso_inclination()) {
        let f = 3.5e-3;
        let drift = |n: usize| raan_drift_along_profile(&edelbaum_profile((r1, i1), (r2, i2), f, n, &E).unwrap().samples, &E);
        let exact = drift(20_000);
        let (coarse, fine) = ((drift(50) - exact).abs(), (drift(100) - exact).abs());
        prop_assert!(fine <= 0.5 * coarse + 1e-9, "error {coarse} -> {fine}");
    }
}

#[test]
fn edelbaum_equality_only_without_plane_change() {
    let mut rng = rng(8);
    use rand::Rng;
    for _ in 0..1000 {
        let v0 = rng.gen_range(6000.0..8000.0);
        let vf = rng.gen_range(6000.0..8000.0);
        let di = if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(-0.3..0.3)
        };
        let s = edelbaum_solve(v0, vf, di, 3.5e-3).unwrap();
        if di == 0.0 {
            assert!((s.dv - (v0 - vf).abs()).abs() < 1e-9);
        } else {
            assert!(s.dv > (v0 - vf).abs());
        }
    }
    assert_relative_eq!(circular_velocity(E.radius + 700e3, &E), 7504.0, epsilon = 1.0);
}

#[test]
fn returned_branch_dominates_the_others() {
    let mut rng = rng(21);
    for propulsion in [
        Propulsion::HighThrust,
        Propulsion::LowThrust(LowThrustConfig::constant(3.5e-3)),
    ] {
        for _ in 0..20 {
            let p = random_problem(&mut rng, propulsion);
            let Ok(best) = solve_transfer(&p) else { continue };
            for o in solve_transfer_detailed(&p).unwrap() {
                if let Some(s) = o.solution {
                    assert!(best.dv <= s.dv);
                }
            }
        }
    }
}

#[test]
fn wider_altitude_bounds_never_cost_more() {
    let mut rng = rng(33);
    let mut compared = 0;
    for propulsion in [
        Propulsion::HighThrust,
        Propulsion::LowThrust(LowThrustConfig::constant(3.5e-3)),
    ] {
        for _ in 0..20 {
            let mut p = random_problem(&mut rng, propulsion);
            p.bounds = DriftBounds {
                min_altitude: 600e3,
                max_altitude: 1200e3,
            };
            let Ok(narrow) = solve_transfer(&p) else { continue };
            p.bounds = DriftBounds::default();
            let wide = solve_transfer(&p).expect("relaxing the bounds keeps the problem feasible");
            assert!(wide.dv <= narrow.dv + 0.5, "{p:?}: {} > {}", wide.dv, narrow.dv);
            compared += 1;
        }
    }
    assert!(compared > 10);
}
