use std::f64::consts::TAU;

use proptest::prelude::*;
use thickscape::dynamics::{iterate_orbit, monotonicity_audit, LyapunovSense, OrbitParams};
use thickscape::linearization::{local_estimates, operator_a, RADII};
use thickscape::morse::analyze;
use thickscape::scenario::OrbitSettings;
use thickscape::{parse_scenario, ReturnMapSystem, Scenario, SeedSpec, Tolerances};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn concentric_circles_return_to_start(r in 1.0001f64..=3.0, theta in 0.0..TAU) {
        let sys = ReturnMapSystem::concentric_circles(r).unwrap();
        let c = sys.core.curve_point(theta).unwrap();
        prop_assert!(sys.return_map(&c).unwrap().distance(&c) <= 1e-9);
    }

    #[test]
    fn concentric_spheres_return_to_start(r in 1.0001f64..=3.0, z in -1.0f64..1.0, phi in 0.0..TAU) {
        let sys = ReturnMapSystem::concentric_spheres(r).unwrap();
        let s = (1.0 - z * z).sqrt();
        let c = sys.core.sphere_point(&nalgebra::Vector3::new(s * phi.cos(), s * phi.sin(), z)).unwrap();
        prop_assert!(sys.return_map(&c).unwrap().distance(&c) <= 1e-7);
    }

    #[test]
    fn ellipse_thickness_is_the_exit_distance(a in 1.3f64..3.0, ratio in 0.5f64..1.0, theta in 0.0..TAU) {
        let b = (a * ratio).max(1.2);
        let sys = ReturnMapSystem::circle_in_ellipse(a, b).unwrap();
        let c = sys.core.curve_point(theta).unwrap();
        let want = 1.0 / (theta.cos().powi(2) / (a * a) + theta.sin().powi(2) / (b * b)).sqrt() - 1.0;
        prop_assert!((sys.thickness(&c).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn scenario_round_trip_is_idempotent(
        slack in 1e-12f64..1e-8,
        tol_grad in 1e-10f64..1e-6,
        count in 1usize..500,
        rng_seed in any::<u64>(),
        random in any::<bool>(),
        max_steps in 1usize..100_000,
    ) {
        let sc = Scenario {
            name: "prop".into(),
            dimension: 2,
            core: thickscape::Core::Curve(thickscape::geometry2d::SupportCurve2D::unit_circle()),
            thickness: thickscape::ThicknessField::Fourier(vec![[0.5, 0.0], [0.1, 0.0]]),
            tolerances: Tolerances { slack, tol_grad, ..Tolerances::default() },
            seeds: if random { SeedSpec::Random { count, rng_seed } } else { SeedSpec::Uniform(count) },
            orbit: OrbitSettings { max_steps, ..OrbitSettings::default() },
            topology: None,
        };
        let once = parse_scenario(&sc.normalized()).unwrap();
        let twice = parse_scenario(&once.normalized()).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.normalized(), twice.normalized());
        prop_assert_eq!(once.hash(), sc.hash());
    }
}

fn fourier_field() -> impl Strategy<Value = Vec<[f64; 2]>> {
    (1usize..=4, prop::collection::vec((0.0f64..0.12, 0.0..TAU), 4)).prop_map(|(order, modes)| {
        let mut c = vec![[1.0, 0.0]];
        c.extend(modes.into_iter().take(order).map(|(r, p)| [r * p.cos(), r * p.sin()]));
        c
    })
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn orbits_raise_thickness(coeffs in fourier_field(), theta in 0.0..TAU) {
        let sys = ReturnMapSystem::planar_fourier(coeffs).unwrap();
        let c = sys.core.curve_point(theta).unwrap();
        let t = iterate_orbit(&sys, &c, &OrbitParams::default()).unwrap();
        let up = monotonicity_audit(&t, 1e-10, 1e-8, LyapunovSense::Increasing);
        prop_assert!(up.violations.is_empty(), "{:?}", up.violations);
    }

    #[test]
    fn circle_index_sum_vanishes(coeffs in fourier_field()) {
        let sys = ReturnMapSystem::planar_fourier(coeffs).unwrap();
        let (_, cat) = analyze(&sys).unwrap();
        prop_assume!(cat.morse);
        let sum: i64 = cat.records.iter().map(|r| if r.index % 2 == 0 { 1 } else { -1 }).sum();
        prop_assert_eq!(sum, 0);
        prop_assert!(cat.records.len() >= 2 && cat.records.len() % 2 == 0);
    }

    #[test]
    fn quadratic_fit_bounds_are_ordered(coeffs in fourier_field()) {
        let sys = ReturnMapSystem::planar_fourier(coeffs).unwrap();
        let (_, cat) = analyze(&sys).unwrap();
        for rec in cat.records.iter().filter(|r| !r.degenerate).take(2) {
            let lin = operator_a(&sys, rec).unwrap();
            prop_assert!(lin.consistency_residual <= 1e-8);
            let est = local_estimates(&sys, &lin, &RADII[..3]).unwrap();
            prop_assert!(est.alpha <= est.beta);
        }
    }
}
