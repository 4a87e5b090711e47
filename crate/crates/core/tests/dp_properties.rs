mod common;

use momentforge::dist::{self, DiscreteDistribution};
use momentforge::dp::{self, DpConfig, PrivacyBudget};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbors_differ_within_sensitivity(seed in 0u64..10_000, n in 2usize..60, k in 1usize..80) {
        let mut rng = common::rng(seed);
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut neighbor = data.clone();
        let i = rng.gen_range(0..n);
        neighbor[i] = if rng.gen::<bool>() { rng.gen_range(-1.0..=1.0) } else { -data[i].signum() };
        let a = dp::scaled_moment_vector(&data, k).unwrap();
        let b = dp::scaled_moment_vector(&neighbor, k).unwrap();
        let sq: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        prop_assert!(sq <= dp::sensitivity_sq_bound(n, k) * (1.0 + 1e-12));
    }

    #[test]
    fn synthesis_is_deterministic_in_the_seed(seed in 0u64..100) {
        let mut rng = common::rng(seed);
        let data: Vec<f64> = (0..120).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let cfg = DpConfig::new(PrivacyBudget::new(0.5, 1e-3).unwrap());
        let a = dp::dp_synthesize(&data, &cfg, seed).unwrap();
        let b = dp::dp_synthesize(&data, &cfg, seed).unwrap();
        prop_assert_eq!(&a.distribution, &b.distribution);
        let (replayed, _) = dp::release_from_moments(&a.noisy, &cfg.solver).unwrap();
        prop_assert_eq!(replayed, a.distribution);
    }
}

#[test]
fn noise_has_the_stated_variance() {
    let scales = [1.0, 4.0, 9.0];
    let sigma2 = 0.25;
    let trials = 20_000;
    let mut sums = [0.0; 3];
    let mut squares = [0.0; 3];
    for seed in 0..trials {
        let v = dp::gaussian_noise_vector(&scales, sigma2, seed);
        for i in 0..3 {
            sums[i] += v[i];
            squares[i] += v[i] * v[i];
        }
    }
    for i in 0..3 {
        let mean = sums[i] / trials as f64;
        let var = squares[i] / trials as f64 - mean * mean;
        let target = scales[i] * sigma2;
        assert!(mean.abs() < 4.0 * (target / trials as f64).sqrt(), "mean {mean}");
        // relative standard error of a variance estimate is sqrt(2/trials) = 1%
        assert!((var / target - 1.0).abs() < 0.05, "variance {var} vs {target}");
    }
}

#[test]
fn calibrated_variance_formula() {
    let b = PrivacyBudget::new(0.5, 1e-4).unwrap();
    let (n, k) = (1000usize, 1000usize);
    let expected = 16.0 / std::f64::consts::PI * (1.0 + (k as f64).ln()) * (1.25f64 / 1e-4).ln()
        / (0.25 * 1e6);
    assert!((b.sigma2(n, k) / expected - 1.0).abs() < 1e-12);
    // Gaussian mechanism: σ² = 2 ln(1.25/δ) Δ² / ε², with Δ² the sensitivity bound
    let mechanism = 2.0 * (1.25f64 / 1e-4).ln() * dp::sensitivity_sq_bound(n, k) / 0.25;
    assert!((b.sigma2(n, k) / mechanism - 1.0).abs() < 1e-12);
}

#[test]
fn normsum_bound_holds_except_smallest_three_dimensional_case() {
    for m in 1..=40 {
        assert!(dp::normsum(m, 2) <= dp::normsum_bound(m, 2), "d = 2, m = {m}");
    }
    for m in 2..=40 {
        assert!(dp::normsum(m, 3) <= dp::normsum_bound(m, 3), "d = 3, m = {m}");
    }
    assert!(dp::normsum(1, 3) > dp::normsum_bound(1, 3));
}

#[test]
fn noiseless_release_recovers_two_dimensional_grid_data() {
    let h = 4;
    let data: Vec<f64> = (0..60)
        .flat_map(|i| [((i % 9) as f64 - 4.0) / 4.0, ((i * 7 % 9) as f64 - 4.0) / 4.0])
        .collect();
    let mut cfg = DpConfig::new(PrivacyBudget::new(1.0, 1e-3).unwrap());
    cfg.sigma2_override = Some(0.0);
    cfg.h = Some(h);
    cfg.k = Some(4);
    cfg.solver.max_iters = 20_000;
    cfg.solver.relative_gap = 0.0;
    let out = dp::dp_synthesize_multi(&data, 2, &cfg, 3).unwrap();
    let p = DiscreteDistribution::uniform(2, data).unwrap();
    assert!(dp::multi_moment_gamma(&p, &out.distribution, 4).unwrap() < 1e-8);
}

#[test]
fn out_of_range_data_is_clamped_and_counted() {
    let mut data: Vec<f64> = (0..100).map(|i| (i as f64 / 50.0) - 1.0).collect();
    data[0] = -3.0;
    data[1] = 2.0;
    let cfg = DpConfig::new(PrivacyBudget::new(0.5, 1e-3).unwrap());
    let out = dp::dp_synthesize(&data, &cfg, 1).unwrap();
    assert_eq!(out.report.clamped, 2);
    assert!(dp::dp_synthesize(&[0.0, f64::NAN], &cfg, 1).is_err());
}

#[test]
fn error_tracks_the_rate_at_moderate_n() {
    let mut rng = common::rng(44);
    let n = 400;
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0f64..=1.0).powi(3)).collect();
    let eps = 0.5;
    let delta = 1.0 / (n * n) as f64;
    let cfg = DpConfig::new(PrivacyBudget::new(eps, delta).unwrap());
    let mut total = 0.0;
    for seed in 0..5 {
        let out = dp::dp_synthesize(&data, &cfg, seed).unwrap();
        let p = DiscreteDistribution::uniform(1, data.clone()).unwrap();
        total += dist::w1_distance(&p, &out.distribution).unwrap();
    }
    assert!(total / 5.0 <= 5.0 * dp::expected_error_curve(n, eps, delta));
}
