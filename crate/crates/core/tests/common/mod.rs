#![allow(dead_code)]

use momentforge::sampling::{self, SeededRng};
use momentforge::DiscreteDistribution;
use rand::Rng;

/// Optimal transport cost between two 1-D distributions with cost `|x - y|`,
/// by successive shortest paths on the bipartite flow network.
pub fn transport_oracle(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    let (a, b) = (p.len(), q.len());
    let mut supply: Vec<f64> = p.weights().to_vec();
    let mut demand: Vec<f64> = q.weights().to_vec();
    let cost = |i: usize, j: usize| (p.point(i)[0] - q.point(j)[0]).abs();
    // flow[i][j] on forward arcs; residual reverse arcs carry it back
    let mut flow = vec![vec![0.0f64; b]; a];
    let mut total = 0.0;
    let eps = 1e-15;
    loop {
        let remaining: f64 = supply.iter().sum();
        if remaining <= 1e-13 {
            break;
        }
        // Bellman-Ford over nodes 0..a (sources), a..a+b (sinks)
        let n = a + b;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        for i in 0..a {
            if supply[i] > eps {
                dist[i] = 0.0;
            }
        }
        for _ in 0..n {
            let mut changed = false;
            for i in 0..a {
                for j in 0..b {
                    if dist[i] + cost(i, j) < dist[a + j] - 1e-15 {
                        dist[a + j] = dist[i] + cost(i, j);
                        prev[a + j] = i;
                        changed = true;
                    }
                    if flow[i][j] > eps && dist[a + j] - cost(i, j) < dist[i] - 1e-15 {
                        dist[i] = dist[a + j] - cost(i, j);
                        prev[i] = a + j;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let sink = (0..b)
            .filter(|&j| demand[j] > eps && dist[a + j].is_finite())
            .min_by(|&x, &y| dist[a + x].partial_cmp(&dist[a + y]).unwrap())
            .expect("unbalanced transport problem");
        // bottleneck along the path
        let mut path = vec![a + sink];
        let mut node = a + sink;
        while prev[node] != usize::MAX {
            node = prev[node];
            path.push(node);
        }
        let source = node;
        let mut amount = supply[source].min(demand[sink]);
        for w in path.windows(2) {
            let (to, from) = (w[0], w[1]);
            if from >= a {
                // reverse arc sink(from) -> source(to)
                amount = amount.min(flow[to][from - a]);
            }
        }
        for w in path.windows(2) {
            let (to, from) = (w[0], w[1]);
            if from < a {
                flow[from][to - a] += amount;
                total += amount * cost(from, to - a);
            } else {
                flow[to][from - a] -= amount;
                total -= amount * cost(to, from - a);
            }
        }
        supply[source] -= amount;
        demand[sink] -= amount;
    }
    total
}

/// `size` points uniform on `[-1, 1]` with random weights.
pub fn random_distribution(rng: &mut SeededRng, size: usize) -> DiscreteDistribution {
    let points: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let weights: Vec<f64> = (0..size).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteDistribution::normalized(1, points, weights).unwrap()
}

pub fn rng(seed: u64) -> SeededRng {
    sampling::rng_from_seed(seed)
}

/// Random orthogonal matrix (row-major) from the QR factorization of a
/// Gaussian matrix.
pub fn random_orthogonal(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let g = nalgebra::DMatrix::from_fn(n, n, |_, _| sampling::standard_normal(rng));
    let q = g.qr().q();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = q[(i, j)];
        }
    }
    out
}

/// `Q diag(d) Qᵀ`, row-major.
pub fn rotate_diagonal(q: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|l| q[i * n + l] * d[l] * q[j * n + l]).sum();
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

/// Symmetric matrix with independent `N(0, 1/n)` entries on and above the
/// diagonal.
pub fn random_symmetric(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = scale * sampling::standard_normal(rng);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}
