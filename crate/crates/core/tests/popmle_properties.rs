mod common;

use std::f64::consts::PI;

use momentforge::dist::{self, DiscreteDistribution};
use momentforge::popmle::{self, NpmleConfig};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fingerprint_matches_tally(obs in prop::collection::vec(0u64..=9, 1..300)) {
        let fp = popmle::fingerprint(&obs, 9).unwrap();
        for s in 0..=9u64 {
            prop_assert_eq!(fp.counts()[s as usize], obs.iter().filter(|&&x| x == s).count() as u64);
        }
        prop_assert_eq!(fp.coins(), obs.len() as u64);
        prop_assert!((fp.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn em_log_likelihood_never_decreases(seed in 0u64..1000, t in 1usize..20) {
        let mut rng = common::rng(seed);
        let a: f64 = rng.gen_range(0.0..1.0);
        let b: f64 = rng.gen_range(0.0..1.0);
        let obs: Vec<u64> = (0..300).map(|i| popmle::toss(&mut rng, t, if i % 2 == 0 { a } else { b })).collect();
        let fp = popmle::fingerprint(&obs, t).unwrap();
        let r = popmle::npmle_em(&fp, &NpmleConfig { grid_size: 50, tolerance: 1e-9, max_iters: 500 }).unwrap();
        prop_assert!(r.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
        prop_assert!((r.grid_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn naive_estimator_is_uniform(obs in prop::collection::vec(0u64..=5, 1..50)) {
        let d = popmle::naive_estimator(&obs, 5).unwrap();
        prop_assert!(d.weights().iter().all(|&w| (w - 1.0 / obs.len() as f64).abs() < 1e-15));
    }

    #[test]
    fn unit_w1_is_half_the_mapped_distance(seed in 0u64..1000) {
        let mut rng = common::rng(seed);
        let p = common::random_distribution(&mut rng, 4);
        let q = common::random_distribution(&mut rng, 3);
        let to_unit = |d: &DiscreteDistribution| {
            DiscreteDistribution::new(1, d.points().iter().map(|x| 0.5 * (x + 1.0)).collect(), d.weights().to_vec()).unwrap()
        };
        let (pu, qu) = (to_unit(&p), to_unit(&q));
        let w = popmle::w1_unit_interval(&pu, &qu).unwrap();
        prop_assert!((w - 0.5 * dist::w1_distance(&p, &q).unwrap()).abs() < 1e-12);
        prop_assert!((w - common::transport_oracle(&pu, &qu)).abs() < 1e-8);
    }

    #[test]
    fn shifted_coefficient_decay(
        terms in prop::collection::vec((-1.0f64..1.0, 0.1f64..6.0, -3.0f64..3.0), 1..4)
    ) {
        let lip: f64 = terms.iter().map(|(a, b, _)| (a * b).abs()).sum::<f64>().max(1e-12);
        let f = |x: f64| terms.iter().map(|(a, b, c)| a * (b * x + c).sin()).sum::<f64>() / lip;
        let c = popmle::shifted_cheb_coeffs(f, 200).unwrap();
        let v = momentforge::cheb::decay_functional(&c.to_convention(momentforge::Convention::Normalized)).unwrap();
        // a 1-Lipschitz function on [0, 1] is 1/2-Lipschitz in the shifted variable
        prop_assert!(v <= PI / 8.0 + 1e-9);
        prop_assert!(v <= 2.0 * PI);
    }
}

/// Log-likelihood over the simplex of three weights, searched on a 0.001 lattice.
fn brute_force_best(fp: &popmle::Fingerprint, grid: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=1000 {
        for j in 0..=(1000 - i) {
            let w = [i as f64 / 1000.0, j as f64 / 1000.0, (1000 - i - j) as f64 / 1000.0];
            let ll = popmle::log_likelihood(fp, grid, &w).unwrap();
            if ll > best {
                best = ll;
            }
        }
    }
    best
}

#[test]
fn em_matches_grid_search_on_a_small_case() {
    let mut rng = common::rng(21);
    let obs: Vec<u64> = (0..100)
        .map(|_| {
            let p = rng.gen_range(0.2..0.8);
            popmle::toss(&mut rng, 2, p)
        })
        .collect();
    let fp = popmle::fingerprint(&obs, 2).unwrap();
    let r = popmle::npmle_em(&fp, &NpmleConfig { grid_size: 3, tolerance: 1e-14, max_iters: 100_000 }).unwrap();
    let best = brute_force_best(&fp, &popmle::unit_grid(3));
    assert!(r.final_log_likelihood() >= best - 1e-3, "EM {} vs search {best}", r.final_log_likelihood());
    assert!(r.final_log_likelihood() <= best + 1e-1);
}

#[test]
fn em_is_at_least_as_likely_as_the_generating_mixture() {
    let g = 21;
    let grid = popmle::unit_grid(g);
    let mut q = vec![0.0; g];
    q[4] = 0.3;
    q[15] = 0.7;
    let t = 30;
    let mut rng = common::rng(5);
    let obs: Vec<u64> = (0..5000)
        .map(|_| {
            let p = if rng.gen::<f64>() < 0.3 { grid[4] } else { grid[15] };
            popmle::toss(&mut rng, t, p)
        })
        .collect();
    let fp = popmle::fingerprint(&obs, t).unwrap();
    let cfg = NpmleConfig { grid_size: g, tolerance: 1e-12, max_iters: 50_000 };
    let r = popmle::npmle_em(&fp, &cfg).unwrap();
    let at_q = popmle::log_likelihood(&fp, &grid, &q).unwrap();
    assert!(r.final_log_likelihood() >= at_q - 1e-6);
}

#[test]
fn coefficient_bound_small_degrees() {
    for t in 1..=25 {
        for m in 0..=t {
            let c = popmle::cheb_to_bernstein(t, m).unwrap();
            assert!(c.max_abs() <= c.bound(), "t = {t}, m = {m}");
        }
    }
}

#[test]
fn degenerate_fingerprint_skips_iteration() {
    let fp = popmle::fingerprint(&[3; 40], 6).unwrap();
    let r = popmle::npmle_em(&fp, &NpmleConfig::default()).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.distribution.points(), &[0.5]);
}
