//! Fast approximate Chebyshev moment maps.
//!
//! With `θ_i = arccos x_i`, the moment `Σ_i z_i T_j(x_i)` is the cosine sum
//! `Σ_i z_i cos(j θ_i)`. Each nonuniform angle is spread onto an
//! oversampled uniform grid of the circle with the weights of a local
//! Lagrange interpolant, after which all `k` sums come out of one FFT. The
//! transpose uses the same weights in the opposite direction, so the pair
//! is an exact adjoint of one linear map that agrees with the true moments
//! to about `1e-12` relative accuracy.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Interpolation stencil width.
const STENCIL: usize = 16;
/// Minimum ratio of circle grid points to the moment degree.
const OVERSAMPLING: usize = 16;

#[derive(Clone)]
pub(crate) struct FourierMoments {
    k: usize,
    len: usize,
    /// First stencil index per node (mod `len`).
    base: Vec<usize>,
    /// `STENCIL` weights per node.
    weights: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierMoments {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierMoments")
            .field("k", &self.k)
            .field("len", &self.len)
            .field("nodes", &self.base.len())
            .finish()
    }
}

impl FourierMoments {
    pub(crate) fn new(nodes: &[f64], k: usize) -> Self {
        let len = (OVERSAMPLING * k.max(STENCIL)).next_power_of_two();
        let step = 2.0 * PI / len as f64;
        let bary: Vec<f64> = (0..STENCIL)
            .map(|m| {
                let c = binomial(STENCIL - 1, m);
                if m % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .collect();
        let mut base = Vec::with_capacity(nodes.len());
        let mut weights = Vec::with_capacity(nodes.len() * STENCIL);
        for &x in nodes {
            let theta = x.clamp(-1.0, 1.0).acos();
            let pos = theta / step;
            let first = pos.floor() as isize - (STENCIL / 2) as isize + 1;
            base.push(first.rem_euclid(len as isize) as usize);
            let local: Vec<f64> = (0..STENCIL).map(|m| pos - (first + m as isize) as f64).collect();
            if let Some(hit) = local.iter().position(|&d| d == 0.0) {
                weights.extend((0..STENCIL).map(|m| if m == hit { 1.0 } else { 0.0 }));
            } else {
                let terms: Vec<f64> = local.iter().zip(&bary).map(|(d, b)| b / d).collect();
                let total: f64 = terms.iter().sum();
                weights.extend(terms.iter().map(|t| t / total));
            }
        }
        let mut planner = FftPlanner::new();
        Self {
            k,
            len,
            base,
            weights,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    /// `out_j = Σ_i z_i cos(j θ_i)` for `j = 1..=k`.
    pub(crate) fn apply(&self, z: &[f64], out: &mut [f64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0.0 {
                continue;
            }
            let w = &self.weights[i * STENCIL..(i + 1) * STENCIL];
            let mut l = self.base[i];
            for &wm in w {
                buf[l].re += zi * wm;
                l += 1;
                if l == self.len {
                    l = 0;
                }
            }
        }
        self.forward.process(&mut buf);
        for (o, c) in out.iter_mut().zip(&buf[1..=self.k]) {
            *o = c.re;
        }
    }

    /// `out_i = Σ_j y_j cos(j θ_i)`.
    pub(crate) fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &yj) in buf[1..=self.k].iter_mut().zip(y) {
            b.re = yj;
        }
        self.inverse.process(&mut buf);
        for (i, o) in out.iter_mut().enumerate() {
            let w = &self.weights[i * STENCIL..(i + 1) * STENCIL];
            let mut l = self.base[i];
            let mut acc = 0.0;
            for &wm in w {
                acc += wm * buf[l].re;
                l += 1;
                if l == self.len {
                    l = 0;
                }
            }
            *o = acc;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_cosine_sums() {
        let nodes: Vec<f64> = (0..=600).map(|i| (i as f64 - 300.0) / 300.0).collect();
        let k = 200;
        let op = FourierMoments::new(&nodes, k);
        let z: Vec<f64> = (0..nodes.len()).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let mut fast = vec![0.0; k];
        op.apply(&z, &mut fast);
        for j in [1, 2, 57, 199, 200] {
            let exact: f64 = nodes
                .iter()
                .zip(&z)
                .map(|(x, w)| w * (j as f64 * x.acos()).cos())
                .sum();
            assert!((fast[j - 1] - exact).abs() < 1e-12 * z.iter().sum::<f64>(), "j = {j}");
        }
        let y: Vec<f64> = (1..=k).map(|j| 1.0 / j as f64).collect();
        let mut back = vec![0.0; nodes.len()];
        op.apply_transpose(&y, &mut back);
        for i in [0, 1, 300, 451, 600] {
            let exact: f64 = (1..=k).map(|j| (j as f64 * nodes[i].acos()).cos() / j as f64).sum();
            assert!((back[i] - exact).abs() < 1e-12, "node {i}");
        }
    }
}
