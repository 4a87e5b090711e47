use std::f64::consts::PI;

use momentforge::cheb::{self, ChebCoefficients, Convention};
use proptest::prelude::*;

/// Smooth test function `Σ a_i sin(b_i x + c_i)` scaled to Lipschitz
/// constant at most one.
fn smooth_lipschitz(terms: &[(f64, f64, f64)]) -> impl Fn(f64) -> f64 + '_ {
    let lip: f64 = terms.iter().map(|(a, b, _)| (a * b).abs()).sum::<f64>().max(1e-12);
    move |x| terms.iter().map(|(a, b, c)| a * (b * x + c).sin()).sum::<f64>() / lip
}

/// Piecewise-linear interpolant through `(x_i, y_i)` with slopes clipped to
/// `[-1, 1]`.
fn piecewise_lipschitz(slopes: Vec<f64>) -> impl Fn(f64) -> f64 {
    let pieces = slopes.len();
    move |x| {
        let width = 2.0 / pieces as f64;
        let mut y = 0.0;
        let mut left = -1.0;
        for &s in &slopes {
            let right = left + width;
            if x <= right {
                return y + s * (x - left);
            }
            y += s * width;
            left = right;
        }
        y
    }
}

proptest! {
    #[test]
    fn recurrence_matches_trig_form(j in 0usize..200, x in -1.0f64..=1.0) {
        let t = cheb::eval_t(j, x).unwrap();
        prop_assert!((t - (j as f64 * x.acos()).cos()).abs() < 1e-11);
        prop_assert!(t.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn second_kind_matches_trig_form(j in 0usize..100, theta in 0.01f64..3.13) {
        let u = cheb::eval_u(j, theta.cos()).unwrap();
        let expected = ((j + 1) as f64 * theta).sin() / theta.sin();
        prop_assert!((u - expected).abs() < 1e-9 * (j as f64 + 1.0));
    }

    #[test]
    fn convention_round_trip(values in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let c = ChebCoefficients::new(values.clone(), Convention::Plain).unwrap();
        let back = c.to_convention(Convention::Normalized).to_convention(Convention::Plain);
        for (a, b) in back.values.iter().zip(&values) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let x = 0.3;
        let direct = c.eval(x).unwrap();
        let via = c.to_convention(Convention::Normalized).eval(x).unwrap();
        prop_assert!((direct - via).abs() < 1e-10);
    }

    #[test]
    fn damping_factors_in_unit_interval(k in 1usize..300) {
        let d = cheb::jackson_damping(k).unwrap();
        prop_assert_eq!(d.damping.len(), k + 1);
        prop_assert_eq!(d.damping[0], 1.0);
        prop_assert!(d.damping.iter().all(|&b| b > 0.0 && b <= 1.0));
        prop_assert!(d.damping.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn discrete_orthogonality(g in 2usize..64, i in 0usize..64, j in 0usize..64) {
        prop_assume!(i + j < 2 * g);
        let nodes = cheb::chebyshev_nodes(g).unwrap();
        let s: f64 = nodes
            .iter()
            .map(|&x| cheb::eval_t(i, x).unwrap() * cheb::eval_t(j, x).unwrap())
            .sum::<f64>()
            * PI
            / g as f64;
        let expected = if i != j { 0.0 } else if i == 0 { PI } else { PI / 2.0 };
        prop_assert!((s - expected).abs() < 1e-10);
    }

    #[test]
    fn decay_functional_at_most_half_pi(
        terms in prop::collection::vec((-1.0f64..1.0, 0.1f64..4.0, -3.0f64..3.0), 1..5)
    ) {
        let f = smooth_lipschitz(&terms);
        let c = cheb::cheb_interpolation_coeffs(&f, 200).unwrap();
        let v = cheb::decay_functional(&c.to_convention(Convention::Normalized)).unwrap();
        prop_assert!(v <= PI / 2.0 + 1e-9, "functional {v}");
    }

    #[test]
    fn jackson_error_within_bound(
        slopes in prop::collection::vec(-1.0f64..=1.0, 1..12),
        k in prop::sample::select(vec![4usize, 8, 16, 32, 64]),
    ) {
        let f = piecewise_lipschitz(slopes);
        let fk = cheb::cheb_interpolation_coeffs(&f, 2048)
            .unwrap()
            .damped(&cheb::jackson_damping(k).unwrap());
        let err = (0..=2000)
            .map(|i| -1.0 + i as f64 / 1000.0)
            .map(|x| (f(x) - fk.eval(x).unwrap()).abs())
            .fold(0.0, f64::max);
        prop_assert!(err <= 18.0 / k as f64, "k = {k}, error {err}");
    }
}

#[test]
fn identity_attains_the_decay_bound() {
    let c = cheb::cheb_interpolation_coeffs(|x| x, 10).unwrap();
    let v = cheb::decay_functional(&c.to_convention(Convention::Normalized)).unwrap();
    assert!((v - PI / 2.0).abs() < 1e-12);
}

#[test]
fn decay_functional_rejects_plain_coefficients() {
    let c = ChebCoefficients::new(vec![0.0, 1.0], Convention::Plain).unwrap();
    assert!(cheb::decay_functional(&c).is_err());
}

#[test]
fn out_of_domain_evaluation_fails() {
    assert!(cheb::eval_t(3, 1.5).is_err());
    assert!(cheb::eval_t(3, 1.0 + 1e-13).is_ok());
}
