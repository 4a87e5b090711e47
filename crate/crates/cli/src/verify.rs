use std::f64::consts::PI;

use momentforge::cheb::{self, Convention};

use crate::args::Suite;

/// Runs the selected suites, printing one line each; true when all pass.
pub fn run(suite: Suite) -> bool {
    let suites: &[(Suite, &str, fn() -> (bool, String))] = &[
        (Suite::Decay, "decay", decay),
        (Suite::Jackson, "jackson", jackson),
        (Suite::Orthogonality, "orthogonality", orthogonality),
    ];
    let mut all = true;
    for (s, name, f) in suites {
        if suite != Suite::All && suite != *s {
            continue;
        }
        let (ok, detail) = f();
        println!("{:<14} {}  {detail}", name, if ok { "PASS" } else { "FAIL" });
        all &= ok;
    }
    all
}

fn decay() -> (bool, String) {
    let c = cheb::cheb_interpolation_coeffs(|x| x, 64).expect("positive degree");
    let v = cheb::decay_functional(&c.to_convention(Convention::Normalized)).expect("normalized");
    ((v - PI / 2.0).abs() <= 1e-8, format!("f(x) = x gives {v:.12}, pi/2 = {:.12}", PI / 2.0))
}

fn jackson() -> (bool, String) {
    let f = |x: f64| (x - 0.3).abs();
    let full = cheb::cheb_interpolation_coeffs(f, 2048).expect("positive degree");
    let mut worst = 0.0f64;
    for k in [8usize, 16, 32, 64] {
        let fk = full.damped(&cheb::jackson_damping(k).expect("k >= 1"));
        let err = (0..2001)
            .map(|i| -1.0 + i as f64 / 1000.0)
            .map(|x| (f(x) - fk.eval(x).expect("in domain")).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err * k as f64);
    }
    (worst <= 18.0, format!("max k * ||f - f_k|| = {worst:.4} for |x - 0.3| (limit 18)"))
}

fn orthogonality() -> (bool, String) {
    let g = 64;
    let nodes = cheb::chebyshev_nodes(g).expect("g >= 1");
    let mut worst = 0.0f64;
    for j in 0..g {
        for l in 0..g {
            let s: f64 = nodes
                .iter()
                .map(|&x| cheb::eval_t(j, x).unwrap() * cheb::eval_t(l, x).unwrap())
                .sum();
            let expected = match (j, l) {
                (0, 0) => g as f64,
                _ if j == l => g as f64 / 2.0,
                _ => 0.0,
            };
            worst = worst.max((s - expected).abs());
        }
    }
    (worst <= 1e-9, format!("max deviation of node sums over {g} nodes: {worst:.2e}"))
}
