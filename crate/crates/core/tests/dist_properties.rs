mod common;

use momentforge::cheb::{self, Convention};
use momentforge::dist::{self, DiscreteDistribution, Grid};
use proptest::prelude::*;

proptest! {
    #[test]
    fn w1_matches_transport_oracle(seed in 0u64..5000, a in 1usize..=6, b in 1usize..=6) {
        let mut rng = common::rng(seed);
        let p = common::random_distribution(&mut rng, a);
        let q = common::random_distribution(&mut rng, b);
        let fast = dist::w1_distance(&p, &q).unwrap();
        prop_assert!((fast - common::transport_oracle(&p, &q)).abs() < 1e-8);
        prop_assert!((fast - dist::w1_distance(&q, &p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn w1_is_a_metric(seed in 0u64..5000) {
        let mut rng = common::rng(seed);
        let p = common::random_distribution(&mut rng, 4);
        let q = common::random_distribution(&mut rng, 3);
        let r = common::random_distribution(&mut rng, 5);
        let pq = dist::w1_distance(&p, &q).unwrap();
        let qr = dist::w1_distance(&q, &r).unwrap();
        let pr = dist::w1_distance(&p, &r).unwrap();
        prop_assert!(pr <= pq + qr + 1e-12);
        prop_assert!(dist::w1_distance(&p, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn moments_lie_in_unit_interval(seed in 0u64..5000, k in 1usize..50) {
        let mut rng = common::rng(seed);
        let p = common::random_distribution(&mut rng, 7);
        let m = dist::cheb_moments(&p, k, Convention::Plain).unwrap();
        prop_assert!(m.values().iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let n = m.to_convention(Convention::Normalized);
        for j in 1..=k {
            prop_assert!((n.get(j) * cheb::norm_factor(j) - m.get(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_rounding_moves_at_most_half_a_cell(seed in 0u64..5000, h in 1usize..200) {
        let mut rng = common::rng(seed);
        let p = common::random_distribution(&mut rng, 20);
        let grid = Grid::uniform(h).unwrap();
        let rounded = dist::round_to_grid(p.points(), &grid).unwrap();
        let q = DiscreteDistribution::new(1, rounded, p.weights().to_vec()).unwrap();
        prop_assert!(dist::w1_distance(&p, &q).unwrap() <= dist::uniform_rounding_bound(h, 1) + 1e-15);
    }

    #[test]
    fn arccos_rounding_changes_moments_by_at_most_j_pi_over_2g(
        x in -1.0f64..=1.0, g in 2usize..300, j in 1usize..40
    ) {
        let nodes = cheb::chebyshev_nodes(g).unwrap();
        let y = dist::arccos_round(x, &nodes).unwrap();
        let gap = (cheb::eval_t(j, x).unwrap() - cheb::eval_t(j, y).unwrap()).abs();
        prop_assert!(gap <= j as f64 * std::f64::consts::PI / (2.0 * g as f64) + 1e-12);
    }
}

#[test]
fn point_masses() {
    let a = DiscreteDistribution::point_mass(&[-1.0]).unwrap();
    let b = DiscreteDistribution::point_mass(&[1.0]).unwrap();
    assert_eq!(dist::w1_distance(&a, &b).unwrap(), 2.0);
}

#[test]
fn invalid_distributions_are_rejected() {
    assert!(DiscreteDistribution::new(1, vec![0.0, 0.5], vec![0.5, 0.6]).is_err());
    assert!(DiscreteDistribution::new(1, vec![0.0, 1.5], vec![0.5, 0.5]).is_err());
    assert!(DiscreteDistribution::new(1, vec![0.0], vec![-1.0]).is_err());
}
