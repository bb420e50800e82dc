use proptest::prelude::*;

use zxlb_core::ballot::{
    bridge_stay_positive_exact, sample_bridge_paths, walk_corridor_mc, Barrier, BridgeSpec, Monitoring,
};
use zxlb_core::barriers::{
    barrier_values, count_within, max_violations, moment_report, symmetrize, BarrierFamily, BarrierSpec, WalkConfig,
};
use zxlb_core::models::{unit_grid, FieldSpec};
use zxlb_core::mollifier::{truncation_coefficients, ApproximationParams, Sign, SmoothedIndicator};
use zxlb_core::special::ln_gamma;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

fn corridor(len: usize) -> impl Strategy<Value = BarrierSpec> {
    (prop::collection::vec((-3.0f64..0.0, 0.0f64..3.0), len)).prop_map(|bands| {
        let (lower, upper) = bands.into_iter().unzip();
        BarrierSpec::custom(0, lower, upper).unwrap()
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn good_set_grows_with_slack(spec in corridor(5), seed in 0u64..1000, s1 in -2.0f64..2.0, ds in 0.0f64..2.0) {
        let field = FieldSpec::new(unit_grid(0.01).unwrap(), 1, &[0.5; 4]).unwrap();
        let v = max_violations(&field, seed, 0, &spec).unwrap();
        prop_assert!(count_within(&v, s1) <= count_within(&v, s1 + ds));
        prop_assert!(count_within(&v, -1.0) <= count_within(&v, 0.0));
        prop_assert!(count_within(&v, 0.0) <= count_within(&v, 1.0));
    }

    #[test]
    fn pz_lower_is_a_probability(spec in corridor(4), seed in 0u64..1000) {
        let field = FieldSpec::new(unit_grid(0.05).unwrap(), 1, &[0.5; 3]).unwrap();
        let cfg = WalkConfig::new(BarrierFamily::Thm1, 10, 1.5).unwrap();
        let r = moment_report(&cfg, &spec, &field, 100, &[seed]).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.pz_lower));
        prop_assert!(r.pz_raw >= 0.0);
    }

    #[test]
    fn thm1_width_matches_closed_form(n in 6u32..60, y in 1.0f64..4.0) {
        let Ok(cfg) = WalkConfig::new(BarrierFamily::Thm1, n, y) else { return Ok(()); };
        let spec = barrier_values(&cfg).unwrap();
        for k in cfg.n0..=cfg.nl {
            let (l, u) = spec.at(k).unwrap();
            let width = y / 10.0 + 10.0 * y - 10.0 * symmetrize(f64::ln, k, cfg.n0, cfg.nl, n as i32)
                + symmetrize(|x| x.powf(0.75), k, cfg.n0, cfg.nl, n as i32);
            prop_assert!((u - l - width).abs() < 1e-9);
            // min over x of x^{3/4} - 10 log x is about -21.2
            if 10.1 * y >= 21.3 {
                prop_assert!(l <= u);
            }
        }
    }

    #[test]
    fn thm3_barriers_are_convex_away_from_the_pin(n in 12u32..80, y in 10.0f64..30.0) {
        let cfg = WalkConfig::new(BarrierFamily::Thm3, n, y).unwrap();
        let spec = barrier_values(&cfg).unwrap();
        let half = n as i32 / 2;
        for j in 2..(half.min(cfg.nl - 1)) {
            let (l0, u0) = spec.at(j - 1).unwrap();
            let (l1, u1) = spec.at(j).unwrap();
            let (l2, u2) = spec.at(j + 1).unwrap();
            prop_assert!(u0 - 2.0 * u1 + u2 >= -1e-12);
            prop_assert!(l0 - 2.0 * l1 + l2 >= -1e-12);
        }
    }

    #[test]
    fn symmetrize_is_zero_off_the_open_range(k in -5i32..40, n0 in 0i32..5, gap in 2i32..20) {
        let nl = n0 + gap;
        let n = nl + 2;
        let v = symmetrize(|x| x + 1.0, k, n0, nl, n);
        if k <= n0 || k >= nl {
            prop_assert_eq!(v, 0.0);
        } else if 2 * k <= n {
            prop_assert_eq!(v, (k - n0) as f64 + 1.0);
        } else {
            prop_assert_eq!(v, (nl - k) as f64 + 1.0);
        }
    }

    #[test]
    fn bridges_are_pinned(t in 1usize..40, a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0u64..100) {
        let spec = BridgeSpec::unit(t, a, b, Barrier::None, Barrier::None);
        for path in sample_bridge_paths(&spec, seed, 5).unwrap() {
            prop_assert_eq!(path.len(), t + 1);
            prop_assert_eq!(path[0], a);
            prop_assert!((path[t] - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn exact_ballot_is_scale_invariant(x in 0.1f64..5.0, y in 0.1f64..5.0, t in 1.0f64..200.0, lambda in 0.2f64..5.0) {
        let p = bridge_stay_positive_exact(x, y, t).unwrap();
        let q = bridge_stay_positive_exact(lambda * x, lambda * y, lambda * lambda * t).unwrap();
        prop_assert!((p - q).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn corridor_probability_is_scale_invariant(a in 0.5f64..3.0, b in 0.5f64..3.0, lambda in 0.3f64..3.0, seed in 0u64..50) {
        let base = BridgeSpec::unit(20, a, b, Barrier::Scalar(0.0), Barrier::Scalar(5.0));
        let scaled = BridgeSpec {
            variances: vec![lambda * lambda; 20],
            a: lambda * a,
            b: lambda * b,
            lower: Barrier::Scalar(0.0),
            upper: Barrier::Scalar(5.0 * lambda),
        };
        let p = walk_corridor_mc(&base, seed, 4000, Monitoring::Continuous).unwrap();
        let q = walk_corridor_mc(&scaled, seed, 4000, Monitoring::Continuous).unwrap();
        prop_assert!((p.value - q.value).abs() <= 1e-6, "{} vs {}", p.value, q.value);
    }

    #[test]
    fn wider_corridor_keeps_more_paths(a in 0.5f64..2.0, up in 3.0f64..6.0, extra in 0.5f64..3.0, seed in 0u64..50) {
        let narrow = BridgeSpec::unit(30, a, a, Barrier::Scalar(0.0), Barrier::Scalar(up));
        let wide = BridgeSpec::unit(30, a, a, Barrier::Scalar(0.0), Barrier::Scalar(up + extra));
        let p = walk_corridor_mc(&narrow, seed, 20_000, Monitoring::Discrete).unwrap();
        let q = walk_corridor_mc(&wide, seed + 1, 20_000, Monitoring::Discrete).unwrap();
        prop_assert!(q.value >= p.value - 4.0 * (p.se.powi(2) + q.se.powi(2)).sqrt());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn minorant_below_majorant(delta in 3.0f64..5.0, x in -0.5f64..0.8) {
        let p = ApproximationParams::new(delta, 3.0).unwrap();
        let plus = SmoothedIndicator::build(p, Sign::Plus);
        let minus = SmoothedIndicator::build(p, Sign::Minus);
        let (gp, gm) = (plus.value(x), minus.value(x));
        prop_assert!(gm <= gp + 1e-12);
        prop_assert!(gm >= -1e-12 && gp <= 1.0 + 1e-12);
    }

    #[test]
    fn taylor_coefficients_respect_bound(delta in 3.0f64..5.0) {
        let p = ApproximationParams::new(delta, 3.0).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let ind = SmoothedIndicator::build(p, sign);
            for (l, c) in truncation_coefficients(&ind, 20).unwrap().iter().enumerate() {
                let lf = l as f64;
                let log_bound = 2f64.ln() + 2.0 * p.a * (lf + 1.0) * delta.ln() + lf * (2.0 * std::f64::consts::PI).ln()
                    - ln_gamma(num_complex::Complex64::new(lf + 1.0, 0.0)).re;
                prop_assert!(c.norm().ln() <= log_bound, "l = {}", l);
            }
        }
    }
}
