//! Cross-checks against independent computations.

use num_complex::Complex64;
use zxlb_core::ballot::{reflection_bound_mc, walk_corridor_mc, Barrier, BridgeSpec, Monitoring};
use zxlb_core::barriers::{
    barrier_values, brute_force_count, good_set_count, synthetic_tail_samples, tail_statistics, BarrierFamily,
    BarrierSpec, WalkConfig,
};
use zxlb_core::models::{unit_grid, ExactFieldSampler, FieldSpec};
use zxlb_core::primes::{sieve_primes, PrimePartition};
use zxlb_core::special::bvn_rectangle;
use zxlb_core::zeta::{ln_chi, zeta_eval};

#[test]
fn prime_counts() {
    assert_eq!(sieve_primes(1_000_000).unwrap().len(), 78_498);
    assert_eq!(sieve_primes(10_000_000).unwrap().len(), 664_579);
}

#[test]
fn functional_equation() {
    for t in [10.0, 123.4, 1000.0] {
        let s = Complex64::new(0.55, t);
        let lhs = zeta_eval(s, 1e-10).unwrap().value;
        let rhs = ln_chi(s).exp() * zeta_eval(1.0 - s, 1e-10).unwrap().value;
        assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1.0), "t = {t}: {lhs} vs {rhs}");
    }
}

#[test]
fn three_step_bridge_matches_bivariate_normal() {
    // given S_0 = a and S_3 = b, (S_1, S_2) has means a + (b - a)k/3,
    // variances 2/3 and covariance 1/3
    let (a, b) = (0.5, 0.8);
    let spec = BridgeSpec::unit(3, a, b, Barrier::Scalar(0.0), Barrier::None);
    let est = walk_corridor_mc(&spec, 9, 400_000, Monitoring::Discrete).unwrap();
    let sd = (2.0f64 / 3.0).sqrt();
    let m1 = a + (b - a) / 3.0;
    let m2 = a + 2.0 * (b - a) / 3.0;
    let exact = bvn_rectangle((-m1 / sd, f64::INFINITY), (-m2 / sd, f64::INFINITY), 0.5);
    assert!(est.within_se(exact, 4.0), "{} ± {} vs {exact}", est.value, est.se);
}

#[test]
fn long_bridge_reflection_formula() {
    let spec = BridgeSpec::unit(50, 1.5, 1.0, Barrier::Scalar(0.0), Barrier::None);
    let est = walk_corridor_mc(&spec, 3, 200_000, Monitoring::Continuous).unwrap();
    let exact = -(-2.0f64 * 1.5 / 50.0).exp_m1();
    assert!(est.within_se(exact, 4.0), "{} ± {} vs {exact}", est.value, est.se);
}

#[test]
fn reflection_lower_bound_holds() {
    let r = reflection_bound_mc(1.0, 1.5, (-0.5, 0.5), 1.0, 21, 20_000).unwrap();
    assert!(r.holds(4.0), "{r:?}");
}

#[test]
fn good_set_count_matches_brute_force_on_config_barriers() {
    let part = PrimePartition::sieve(100_000).unwrap();
    let cfg = WalkConfig::new(BarrierFamily::Thm1, 8, 2.0).unwrap();
    let spec = barrier_values(&cfg).unwrap();
    let field = cfg.field(|k| part.best_sk2(k)).unwrap();
    let grid = field.grid().to_vec();
    let vars = field.variances().to_vec();
    for rep in 0..40 {
        for slack in [-1.0, 0.0, 1.0, 5.0] {
            let fast = good_set_count(&field, 5, rep, &spec, slack).unwrap();
            let slow = brute_force_count(&grid, field.first_level(), &vars, field.cell_width(), 5, rep, &spec, slack);
            assert_eq!(fast, slow);
        }
    }
}

#[test]
fn grid_64_brute_force() {
    let grid = unit_grid(1.0 / 63.0).unwrap();
    assert_eq!(grid.len(), 64);
    let vars = [0.5; 4];
    let field = FieldSpec::new(grid.clone(), 1, &vars).unwrap();
    let spec = BarrierSpec::custom(0, vec![-1.0, -1.5, -2.0, -2.5, -3.0], vec![0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
    for rep in 0..100 {
        let fast = good_set_count(&field, 8, rep, &spec, 0.0).unwrap();
        let slow = brute_force_count(&grid, 1, &vars, field.cell_width(), 8, rep, &spec, 0.0);
        assert_eq!(fast, slow);
    }
}

#[test]
fn field_covariance_is_shared_variance() {
    let grid = unit_grid(0.02).unwrap();
    let field = FieldSpec::new(grid.clone(), 1, &[0.5, 0.4, 0.3]).unwrap();
    // the exact sampler with the field's own covariance agrees in law
    let exact = ExactFieldSampler::from_covariance(grid.clone(), |a, b| field.covariance(a, b)).unwrap();
    let a: Vec<f64> = (0..4000).map(|r| field.sample_max(1, r)).collect();
    let b: Vec<f64> = (0..4000).map(|r| exact.sample_max(2, r)).collect();
    let ks = zxlb_core::estimate::ks_distance(&a, &b);
    assert!(ks < 0.05, "KS {ks}");
    for i in [0, 10, 30] {
        assert!((field.covariance(i, i) - 1.2).abs() < 1e-15);
    }
}

#[test]
fn pair_covariance_tracks_block_covariance() {
    let part = PrimePartition::sieve(2_000_000).unwrap();
    let vars: Vec<f64> = (1..=6).map(|k| part.best_sk2(k).unwrap()).collect();
    let grid = unit_grid((-6f64).exp()).unwrap();
    let step = grid[1] - grid[0];
    let field = FieldSpec::new(grid.clone(), 1, &vars).unwrap();
    for m in [2, 3, 4] {
        let d = (-(m as f64)).exp();
        let exact: f64 = (1..=6).map(|j| part.best_rho(j, d).unwrap()).sum();
        let lag = (d / step).round() as usize;
        let pairs = grid.len() - lag;
        let mean = (0..pairs).map(|i| field.covariance(i, i + lag)).sum::<f64>() / pairs as f64;
        assert!((mean - exact).abs() <= 0.15 * exact, "m = {m}: {mean} vs {exact}");
    }
}

#[test]
fn synthetic_tail_recovers_exponent() {
    let samples = synthetic_tail_samples(17, 200_000);
    let ys: Vec<f64> = (0..=12).map(|i| 1.0 + 0.25 * i as f64).collect();
    let fit = tail_statistics(&samples, None, &ys).unwrap().fit.unwrap();
    assert!((fit.slope + 2.0).abs() <= 3.0 * fit.slope_se, "{fit:?}");
}
