//! Discrete distributions on `[-1, 1]^d`, their Chebyshev moments, and the
//! exact one-dimensional Wasserstein-1 distance.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cheb::{self, Convention, MultiIndex, DOMAIN_SLACK};
use crate::error::{Error, Result};

/// Tolerance on `Σ w_i = 1`.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Weights below this are dropped by [`DiscreteDistribution::pruned`].
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Weighted point masses on `[-1, 1]^d`.
///
/// Points are stored flat: point `i` occupies `points[i*d..(i+1)*d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates and builds a distribution. Coordinates within
    /// `DOMAIN_SLACK` of the cube are clamped onto it.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if points.len() != weights.len() * dim {
            return Err(Error::Dimension {
                expected: weights.len() * dim,
                got: points.len(),
            });
        }
        if weights.is_empty() {
            return Err(Error::invalid("distribution has no support points"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        let points = points
            .into_iter()
            .map(cheb::check_domain)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    /// One-dimensional distribution.
    pub fn from_weighted(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::new(1, support, weights)
    }

    /// Like [`Self::new`] but rescales the weights to unit mass first.
    pub fn normalized(dim: usize, points: Vec<f64>, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid(format!("total weight {total} is not positive")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(dim, points, weights)
    }

    /// Uniform distribution over `n` points given flat with dimension `dim`.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.is_empty() || points.len() % dim != 0 {
            return Err(Error::invalid("point list does not split into points"));
        }
        let n = points.len() / dim;
        Self::new(dim, points, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(point: &[f64]) -> Result<Self> {
        Self::new(point.len(), point.to_vec(), vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flat coordinate storage.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    /// Support points of a one-dimensional distribution.
    pub fn support(&self) -> Result<&[f64]> {
        self.require_dim(1)?;
        Ok(&self.points)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for (x, w) in self.iter() {
            mean.iter_mut().zip(x).for_each(|(m, xi)| *m += w * xi);
        }
        mean
    }

    /// Drops weights below [`PRUNE_THRESHOLD`] and restores unit mass.
    pub fn pruned(&self) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.weights[i] >= PRUNE_THRESHOLD)
            .collect();
        if keep.is_empty() {
            return self.clone();
        }
        let total: f64 = keep.iter().map(|&i| self.weights[i]).sum();
        let mut points = Vec::with_capacity(keep.len() * self.dim);
        for &i in &keep {
            points.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            points,
            weights: keep.iter().map(|&i| self.weights[i] / total).collect(),
        }
    }

    /// Applies `x -> scale * x` to every coordinate. The result may leave
    /// the unit cube, so it is only meant for reporting (e.g. undoing the
    /// operator normalization of the spectral pipeline).
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            dim: self.dim,
            points: self.points.iter().map(|x| x * scale).collect(),
            weights: self.weights.clone(),
        }
    }

    pub(crate) fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: self.dim,
            });
        }
        Ok(())
    }
}

/// Chebyshev moments `m_1..=m_k` of a one-dimensional distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    values: Vec<f64>,
    convention: Convention,
}

impl MomentVector {
    /// `values[j - 1]` holds `m_j`.
    pub fn new(values: Vec<f64>, convention: Convention) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("moment vector must have degree >= 1"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("moment {v}")));
        }
        Ok(Self { values, convention })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// `m_j` for `1 <= j <= k`.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn to_convention(&self, convention: Convention) -> Self {
        // E[T̄_j] = E[T_j] / sqrt(π/2) for every j >= 1
        let factor = match (self.convention, convention) {
            (a, b) if a == b => 1.0,
            (Convention::Plain, Convention::Normalized) => (2.0 / PI).sqrt(),
            _ => (PI / 2.0).sqrt(),
        };
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            convention,
        }
    }

    pub fn truncated(&self, k: usize) -> Self {
        Self {
            values: self.values[..k.min(self.values.len())].to_vec(),
            convention: self.convention,
        }
    }
}

/// Chebyshev moments `E_p[T_j]`, `j = 1..=k`.
pub fn cheb_moments(
    p: &DiscreteDistribution,
    k: usize,
    convention: Convention,
) -> Result<MomentVector> {
    p.require_dim(1)?;
    if k == 0 {
        return Err(Error::invalid("moment degree must be positive"));
    }
    let mut acc = vec![0.0; k];
    for (x, w) in p.iter() {
        let x = x[0];
        let (mut prev, mut cur) = (1.0, x);
        acc[0] += w * x;
        for slot in acc.iter_mut().skip(1) {
            let next = 2.0 * x * cur - prev;
            prev = cur;
            cur = next;
            *slot += w * cur;
        }
    }
    MomentVector::new(acc, Convention::Plain).map(|m| m.to_convention(convention))
}

/// Tensor Chebyshev moments `E_p[T_K]` over `K ∈ {0..=m}^d \ {0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiMomentVector {
    pub dim: usize,
    pub degree: usize,
    pub convention: Convention,
    /// Indices in row-major order, as produced by
    /// [`MultiIndex::enumerate_box`].
    pub indices: Vec<MultiIndex>,
    pub values: Vec<f64>,
}

impl MultiMomentVector {
    pub fn get(&self, k: &MultiIndex) -> Option<f64> {
        let flat = flat_index(k.components(), self.degree + 1)?;
        // index 0 is the omitted zero multi-index
        flat.checked_sub(1).map(|i| self.values[i])
    }
}

fn flat_index(k: &[usize], side: usize) -> Option<usize> {
    k.iter().try_fold(0usize, |acc, &ki| {
        if ki < side {
            Some(acc * side + ki)
        } else {
            None
        }
    })
}

/// Tensor moments for `d ∈ {2, 3}`. Under the normalized convention each
/// entry is scaled by `sqrt(2^nnz(K) / π^d)`.
pub fn cheb_moments_multi(
    p: &DiscreteDistribution,
    m: usize,
    convention: Convention,
) -> Result<MultiMomentVector> {
    let d = p.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::invalid(format!(
            "tensor moments need d in {{2, 3}}, got {d}; use cheb_moments for d = 1"
        )));
    }
    let side = m + 1;
    let total = side.pow(d as u32);
    let mut acc = vec![0.0; total];
    let mut table = vec![0.0; d * side];
    for (x, w) in p.iter() {
        for (axis, &xi) in x.iter().enumerate() {
            cheb::fill_t(xi, &mut table[axis * side..(axis + 1) * side]);
        }
        for (flat, slot) in acc.iter_mut().enumerate() {
            let mut rem = flat;
            let mut prod = w;
            for axis in (0..d).rev() {
                prod *= table[axis * side + rem % side];
                rem /= side;
            }
            *slot += prod;
        }
    }
    let indices = MultiIndex::enumerate_box(d, m)?;
    let values = indices
        .iter()
        .zip(&acc[1..])
        .map(|(k, v)| match convention {
            Convention::Plain => *v,
            Convention::Normalized => v * k.normalization(),
        })
        .collect();
    Ok(MultiMomentVector {
        dim: d,
        degree: m,
        convention,
        indices,
        values,
    })
}

/// Exact Wasserstein-1 distance between two distributions on the line,
/// `∫ |F_p(x) - F_q(x)| dx` over the merged support.
pub fn w1_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    p.require_dim(1)?;
    q.require_dim(1)?;
    let mut events: Vec<(f64, f64)> = p
        .iter()
        .map(|(x, w)| (x[0], w))
        .chain(q.iter().map(|(x, w)| (x[0], -w)))
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        cdf_gap += pair[0].1;
        total += cdf_gap.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(total)
}

/// Moment-error summary against the recovery guarantee
/// `W1(p, q) <= 36/k + Γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentErrorReport {
    /// `sqrt(Σ_j (m_j(p) - m_j(q))^2 / j^2)` over plain moments.
    pub gamma: f64,
    pub k: usize,
    /// `36/k + Γ`.
    pub w1_bound: f64,
    /// `2π/k + Γ`, the conjectured sharper constant. Not a guarantee.
    pub w1_bound_conjectured: f64,
}

pub const PROVEN_CONSTANT: f64 = 36.0;

pub fn moment_error_gamma(mp: &MomentVector, mq: &MomentVector) -> Result<MomentErrorReport> {
    for m in [mp, mq] {
        if m.convention() != Convention::Plain {
            return Err(Error::Convention {
                expected: Convention::Plain.name(),
                got: m.convention().name(),
            });
        }
    }
    if mp.k() != mq.k() {
        return Err(Error::Dimension {
            expected: mp.k(),
            got: mq.k(),
        });
    }
    let gamma = weighted_moment_gap(mp.values(), mq.values());
    let k = mp.k();
    Ok(MomentErrorReport {
        gamma,
        k,
        w1_bound: PROVEN_CONSTANT / k as f64 + gamma,
        w1_bound_conjectured: 2.0 * PI / k as f64 + gamma,
    })
}

/// `sqrt(Σ_j (a_j - b_j)^2 / j^2)` with `j` starting at 1.
pub(crate) fn weighted_moment_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let j = (i + 1) as f64;
            (x - y).powi(2) / (j * j)
        })
        .sum::<f64>()
        .sqrt()
}

/// Grid layouts used by the recovery solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// `{-1, -1 + 1/h, .., 1}`, `2h + 1` points in increasing order.
    Uniform { h: usize },
    /// The `g` Chebyshev nodes in the decreasing order of
    /// [`cheb::chebyshev_nodes`].
    ChebyshevNodes { g: usize },
    /// Cartesian product of `d` uniform axes, last axis fastest.
    TensorUniform { h: usize, d: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub kind: GridKind,
    /// Flat point storage; `d` coordinates per point.
    points: Vec<f64>,
}

impl Grid {
    pub fn uniform(h: usize) -> Result<Self> {
        if h == 0 {
            return Err(Error::invalid("uniform grid needs h >= 1"));
        }
        Ok(Self {
            kind: GridKind::Uniform { h },
            points: uniform_axis(h),
        })
    }

    pub fn chebyshev(g: usize) -> Result<Self> {
        Ok(Self {
            kind: GridKind::ChebyshevNodes { g },
            points: cheb::chebyshev_nodes(g)?,
        })
    }

    pub fn tensor_uniform(h: usize, d: usize) -> Result<Self> {
        if h == 0 || !(1..=3).contains(&d) {
            return Err(Error::invalid("tensor grid needs h >= 1 and d in 1..=3"));
        }
        let axis = uniform_axis(h);
        let side = axis.len();
        let total = side.pow(d as u32);
        let mut points = Vec::with_capacity(total * d);
        for flat in 0..total {
            let mut rem = flat;
            let mut coords = vec![0.0; d];
            for c in coords.iter_mut().rev() {
                *c = axis[rem % side];
                rem /= side;
            }
            points.extend(coords);
        }
        Ok(Self {
            kind: GridKind::TensorUniform { h, d },
            points,
        })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            GridKind::TensorUniform { d, .. } => d,
            _ => 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Spacing of a uniform grid.
    pub fn spacing(&self) -> Option<f64> {
        match self.kind {
            GridKind::Uniform { h } | GridKind::TensorUniform { h, .. } => Some(1.0 / h as f64),
            GridKind::ChebyshevNodes { .. } => None,
        }
    }

    /// Distribution on this grid with the given weights.
    pub fn distribution(&self, weights: Vec<f64>) -> Result<DiscreteDistribution> {
        DiscreteDistribution::new(self.dim(), self.points.clone(), weights)
    }
}

fn uniform_axis(h: usize) -> Vec<f64> {
    (0..=2 * h).map(|i| uniform_node(i, h)).collect()
}

#[inline]
fn uniform_node(i: usize, h: usize) -> f64 {
    // (i - h) / h keeps the axis exactly symmetric about zero
    (i as f64 - h as f64) / h as f64
}

/// Index of the nearest point of the uniform axis with spacing `1/h`; exact
/// ties go to the smaller value. Inputs outside `[-1, 1]` land on the ends.
pub fn nearest_uniform_index(x: f64, h: usize) -> usize {
    let pos = (x + 1.0) * h as f64;
    let idx = (pos - 0.5).ceil();
    idx.clamp(0.0, (2 * h) as f64) as usize
}

/// Rounds every point to the nearest value of a one-dimensional uniform
/// grid, breaking ties toward the smaller grid value.
pub fn round_to_grid(points: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    let GridKind::Uniform { h } = grid.kind else {
        return Err(Error::invalid("round_to_grid needs a 1-D uniform grid"));
    };
    if grid.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    Ok(points
        .iter()
        .map(|&x| grid.points[nearest_uniform_index(x, h)])
        .collect())
}

/// Index of the Chebyshev node closest to `x` in angle, i.e. minimizing
/// `|arccos x - arccos y|`. Ties go to the smaller index.
pub fn arccos_round_index(x: f64, g: usize) -> Result<usize> {
    let x = cheb::check_domain(x)?;
    if g == 0 {
        return Err(Error::invalid("empty node set"));
    }
    let theta = x.acos();
    let gf = g as f64;
    let angle = |i: usize| (2 * i + 1) as f64 * PI / (2.0 * gf);
    // angles increase with the node index
    let (mut lo, mut hi) = (0usize, g);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if angle(mid) < theta {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let upper = lo;
    let best = match upper {
        0 => 0,
        u if u == g => g - 1,
        u => {
            if (theta - angle(u - 1)) <= (angle(u) - theta) {
                u - 1
            } else {
                u
            }
        }
    };
    Ok(best)
}

/// The Chebyshev node nearest to `x` in angle. `nodes` must be the output
/// of [`cheb::chebyshev_nodes`].
pub fn arccos_round(x: f64, nodes: &[f64]) -> Result<f64> {
    Ok(nodes[arccos_round_index(x, nodes.len())?])
}

/// Nearest-point rounding error bound of a uniform grid in `d` dimensions
/// under per-coordinate transport: `d / (2h)`.
pub fn uniform_rounding_bound(h: usize, d: usize) -> f64 {
    d as f64 / (2.0 * h as f64)
}

/// Whether `x` lies in `[-1, 1]` up to the clamping slack.
pub fn in_domain(x: f64) -> bool {
    x.abs() <= 1.0 + DOMAIN_SLACK
}
