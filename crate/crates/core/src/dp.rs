//! Differentially private synthetic data by noisy moment matching.
//!
//! The data are rounded to a uniform grid of spacing `1/h`, the first `k`
//! normalized Chebyshev moments of the rounded data are released through
//! the Gaussian mechanism, and a distribution on the same grid is fit to the
//! noisy moments. Everything after the noise draw is a function of the
//! released moments and public parameters only; [`release_from_moments`]
//! replays that step without the data.
//!
//! Data outside `[-1, 1]` are clamped and counted. Clamping depends on the
//! raw data, so callers that need a formal guarantee must bound their data
//! before calling in.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cheb::{self, Convention, MultiIndex};
use crate::dist::{self, DiscreteDistribution, Grid, MomentVector};
use crate::error::{Error, Result};
use crate::recovery::{self, ChebMomentMatrix, MomentMap, QpSolution, SolverOptions};
use crate::sampling;

/// An `(ε, δ)` privacy budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon {epsilon} must lie in (0, 1]")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
        }
        Ok(Self { epsilon, delta })
    }

    /// `(16/π)(1 + ln k) ln(1.25/δ) / (ε² n²)`.
    pub fn sigma2(&self, n: usize, k: usize) -> f64 {
        let n = n as f64;
        16.0 / PI * (1.0 + (k as f64).ln()) * (1.25 / self.delta).ln()
            / (self.epsilon * self.epsilon * n * n)
    }

    /// `4 · 2^d / π^d · S · ln(1.25/δ) / (n² ε²)` with `S` the exact
    /// [`normsum`].
    pub fn sigma2_multi(&self, n: usize, m: usize, d: usize) -> f64 {
        let n = n as f64;
        let df = d as f64;
        4.0 * 2f64.powf(df) / PI.powf(df) * normsum(m, d) * (1.25 / self.delta).ln()
            / (n * n * self.epsilon * self.epsilon)
    }

    /// `εn`, which must be at least one.
    fn scale(&self, n: usize) -> Result<f64> {
        let en = self.epsilon * n as f64;
        if en < 1.0 {
            return Err(Error::invalid(format!(
                "epsilon * n = {en} < 1 leaves no usable grid"
            )));
        }
        Ok(en)
    }
}

/// Squared ℓ2 sensitivity bound `8(1 + ln k)/(π n²)` of the scaled moment
/// vector `(T̄_j averages / √j)_{j ≤ k}`.
pub fn sensitivity_sq_bound(n: usize, k: usize) -> f64 {
    8.0 * (1.0 + (k as f64).ln()) / (PI * (n * n) as f64)
}

/// The statistic whose sensitivity [`sensitivity_sq_bound`] controls:
/// `(1/√j) (1/n) Σ_i T̄_j(x_i)` for `j = 1..=k`.
pub fn scaled_moment_vector(points: &[f64], k: usize) -> Result<Vec<f64>> {
    let p = DiscreteDistribution::uniform(1, points.to_vec())?;
    let m = dist::cheb_moments(&p, k, Convention::Normalized)?;
    Ok(m.values()
        .iter()
        .enumerate()
        .map(|(i, v)| v / ((i + 1) as f64).sqrt())
        .collect())
}

/// Independent normal draws with variances `scales[i] · σ²`, one uniform
/// per draw in index order from a ChaCha8 stream seeded by `seed`.
pub fn gaussian_noise_vector(scales: &[f64], sigma2: f64, seed: u64) -> Vec<f64> {
    if sigma2 == 0.0 {
        return vec![0.0; scales.len()];
    }
    let mut rng = sampling::rng_from_seed(seed);
    scales
        .iter()
        .map(|s| (s * sigma2).sqrt() * sampling::standard_normal(&mut rng))
        .collect()
}

/// `S = Σ 1/‖K‖₂` over `K ∈ {0..m}^d \ {0}`, summed exactly.
pub fn normsum(m: usize, d: usize) -> f64 {
    let side = m + 1;
    let total = side.pow(d as u32);
    (1..total)
        .map(|flat| {
            let mut rest = flat;
            let mut sq = 0u64;
            for _ in 0..d {
                let c = (rest % side) as u64;
                sq += c * c;
                rest /= side;
            }
            1.0 / (sq as f64).sqrt()
        })
        .sum()
}

/// `4 (πe)^{d/2} / 2^d · m^{d-1} / d`, the closed-form upper estimate of
/// [`normsum`].
pub fn normsum_bound(m: usize, d: usize) -> f64 {
    let df = d as f64;
    4.0 * (PI * std::f64::consts::E).powf(df / 2.0) / 2f64.powf(df) * (m as f64).powf(df - 1.0)
        / df
}

/// `ln(εn) √(ln(1/δ)) / (εn)`, the expected-error rate without its leading
/// constant.
pub fn expected_error_curve(n: usize, epsilon: f64, delta: f64) -> f64 {
    let en = epsilon * n as f64;
    en.ln() * (1.0 / delta).ln().sqrt() / en
}

/// `√(ln(1/β) + ln(εn)) √(ln(εn) ln(1/δ)) / (εn)`, the error level exceeded
/// with probability at most `β`, without its leading constant.
pub fn high_probability_bound(n: usize, epsilon: f64, delta: f64, beta: f64) -> f64 {
    let en = epsilon * n as f64;
    ((1.0 / beta).ln() + en.ln()).sqrt() * (en.ln() * (1.0 / delta).ln()).sqrt() / en
}

/// Pipeline parameters. `None` selects the defaults `h = ceil(εn)` and
/// `k = ceil(2εn)` (resp. `ceil((εn)^{1/d})` and `ceil(2(εn)^{1/d})`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    pub budget: PrivacyBudget,
    pub h: Option<usize>,
    pub k: Option<usize>,
    /// Replaces the calibrated noise variance. Anything other than the
    /// calibrated value voids the privacy guarantee; meant for tests.
    pub sigma2_override: Option<f64>,
    pub solver: SolverOptions,
}

impl DpConfig {
    pub fn new(budget: PrivacyBudget) -> Self {
        Self {
            budget,
            h: None,
            k: None,
            sigma2_override: None,
            solver: SolverOptions {
                max_iters: DEFAULT_DP_ITERS,
                relative_gap: DEFAULT_DP_GAP,
                ..SolverOptions::default()
            },
        }
    }
}

/// Iteration cap of the fitting step.
pub const DEFAULT_DP_ITERS: usize = 1000;

/// Relative duality gap at which the fit stops. By the quadratic growth of
/// the objective this keeps the solver's contribution to the weighted
/// moment error under a tenth of the error at the optimum.
pub const DEFAULT_DP_GAP: f64 = 1e-2;

/// The released statistic: noisy normalized moments plus what is needed
/// to replay the fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyMoments {
    pub dim: usize,
    /// Grid resolution per axis.
    pub h: usize,
    /// Degree `k` (1-D) or per-axis degree `m` (d-D).
    pub degree: usize,
    /// Normalized noisy moments; in d-D ordered row-major over
    /// `{0..m}^d \ {0}`.
    pub values: Vec<f64>,
    /// Variance of the noise added to each entry.
    pub variances: Vec<f64>,
    pub sigma2: f64,
    pub seed: u64,
}

/// Diagnostics of one synthesis run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpReport {
    pub n: usize,
    pub dim: usize,
    pub h: usize,
    /// Degree `k` (1-D) or per-axis degree `m` (d-D).
    pub k: usize,
    /// Grid points per axis, `2h + 1`.
    pub r: usize,
    pub sigma2: f64,
    /// Data points moved onto `[-1, 1]` by clamping.
    pub clamped: usize,
    /// Weighted moment error of the output against the noisy moments.
    pub gamma: f64,
    /// Transport cost of the rounding step, `d / (2h)` at most.
    pub rounding_bound: f64,
    pub expected_bound: f64,
    pub hp_bound_beta05: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Output of [`dp_synthesize`] and [`dp_synthesize_multi`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpOutput {
    pub distribution: DiscreteDistribution,
    pub noisy: NoisyMoments,
    pub report: DpReport,
}

fn clamp_all(data: &[f64]) -> Result<(Vec<f64>, usize)> {
    let mut clamped = 0;
    let out = data
        .iter()
        .map(|&x| {
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("data value {x}")));
            }
            if x.abs() > 1.0 {
                clamped += 1;
            }
            Ok(x.clamp(-1.0, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, clamped))
}

/// One-dimensional private synthesis.
pub fn dp_synthesize(data: &[f64], cfg: &DpConfig, seed: u64) -> Result<DpOutput> {
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid("need at least two data points"));
    }
    let budget = cfg.budget;
    let en = budget.scale(n)?;
    let h = cfg.h.unwrap_or(en.ceil() as usize);
    let k = cfg.k.unwrap_or((2.0 * en).ceil() as usize);
    if h == 0 || k == 0 {
        return Err(Error::invalid("grid resolution and degree must be positive"));
    }
    let (data, clamped) = clamp_all(data)?;

    let grid = Grid::uniform(h)?;
    let mut hist = vec![0.0; grid.len()];
    for &x in &data {
        hist[dist::nearest_uniform_index(x, h)] += 1.0;
    }
    hist.iter_mut().for_each(|c| *c /= n as f64);
    let map = ChebMomentMatrix::new(grid.points(), k);
    let mut plain = vec![0.0; k];
    map.apply(&hist, &mut plain);

    let sigma2 = cfg.sigma2_override.unwrap_or_else(|| budget.sigma2(n, k));
    let scales: Vec<f64> = (1..=k).map(|j| j as f64).collect();
    let noise = gaussian_noise_vector(&scales, sigma2, seed);
    let values = plain
        .iter()
        .zip(&noise)
        .map(|(m, e)| m / cheb::norm_factor(1) + e)
        .collect();
    let noisy = NoisyMoments {
        dim: 1,
        h,
        degree: k,
        values,
        variances: scales.iter().map(|s| s * sigma2).collect(),
        sigma2,
        seed,
    };

    let (distribution, solution) = release_from_moments(&noisy, &cfg.solver)?;
    let report = DpReport {
        n,
        dim: 1,
        h,
        k,
        r: grid.len(),
        sigma2,
        clamped,
        gamma: solution.objective.max(0.0).sqrt(),
        rounding_bound: dist::uniform_rounding_bound(h, 1),
        expected_bound: expected_error_curve(n, budget.epsilon, budget.delta),
        hp_bound_beta05: high_probability_bound(n, budget.epsilon, budget.delta, 0.05),
        objective: solution.objective,
        iterations: solution.iterations,
        converged: solution.converged,
    };
    Ok(DpOutput {
        distribution,
        noisy,
        report,
    })
}

/// Fits a distribution on the public grid to released moments. Reads
/// nothing but its arguments.
pub fn release_from_moments(
    noisy: &NoisyMoments,
    solver: &SolverOptions,
) -> Result<(DiscreteDistribution, QpSolution)> {
    match noisy.dim {
        1 => {
            let grid = Grid::uniform(noisy.h)?;
            let k = noisy.degree;
            if noisy.values.len() != k {
                return Err(Error::Dimension {
                    expected: k,
                    got: noisy.values.len(),
                });
            }
            let plain = MomentVector::new(noisy.values.clone(), Convention::Normalized)?
                .to_convention(Convention::Plain);
            let map = ChebMomentMatrix::new(grid.points(), k);
            let weights = recovery::inverse_square_weights(k);
            let sol = recovery::solve_simplex_qp(&map, plain.values(), &weights, solver)?;
            let q = recovery::weights_to_distribution(&grid, &sol.weights)?;
            Ok((q, sol))
        }
        2 | 3 => {
            let d = noisy.dim;
            let map = TensorChebMap::new(noisy.h, noisy.degree, d);
            let expected = map.rows() - 1;
            if noisy.values.len() != expected {
                return Err(Error::Dimension {
                    expected,
                    got: noisy.values.len(),
                });
            }
            let mut target = vec![0.0; map.rows()];
            target[1..].copy_from_slice(&noisy.values);
            let weights = map.inverse_square_norm_weights();
            let sol = recovery::solve_simplex_qp(&map, &target, &weights, solver)?;
            let grid = Grid::tensor_uniform(noisy.h, d)?;
            let q = recovery::weights_to_distribution(&grid, &sol.weights)?;
            Ok((q, sol))
        }
        d => Err(Error::invalid(format!("dimension {d} is not supported"))),
    }
}

/// Normalized tensor Chebyshev moments on a tensor uniform grid, applied
/// one axis at a time. Rows are all `K ∈ {0..m}^d` in row-major order,
/// including `K = 0`.
#[derive(Clone, Debug)]
pub struct TensorChebMap {
    d: usize,
    side: usize,
    degree: usize,
    /// `(m + 1) × side`, entry `(a, b)` is `T̄_a(g_b)`.
    axis: Vec<f64>,
}

impl TensorChebMap {
    pub fn new(h: usize, m: usize, d: usize) -> Self {
        let side = 2 * h + 1;
        let mut axis = vec![0.0; (m + 1) * side];
        let mut col = vec![0.0; m + 1];
        for b in 0..side {
            let x = (b as f64 - h as f64) / h as f64;
            cheb::fill_t(x, &mut col);
            for a in 0..=m {
                axis[a * side + b] = col[a] / cheb::norm_factor(a);
            }
        }
        Self {
            d,
            side,
            degree: m,
            axis,
        }
    }

    /// `1/‖K‖²` per row, zero for `K = 0`.
    pub fn inverse_square_norm_weights(&self) -> Vec<f64> {
        let side = self.degree + 1;
        (0..self.rows())
            .map(|flat| {
                let sq = index_norm_sq(flat, side, self.d);
                if sq == 0 {
                    0.0
                } else {
                    1.0 / sq as f64
                }
            })
            .collect()
    }

    /// Multiplies along `axis_pos` by `mat` (`rows × cols`, or its transpose).
    fn mode_product(
        &self,
        input: &[f64],
        dims: &[usize],
        axis_pos: usize,
        transpose: bool,
    ) -> (Vec<f64>, Vec<usize>) {
        let (mrows, mcols) = (self.degree + 1, self.side);
        let (out_len, in_len) = if transpose { (mcols, mrows) } else { (mrows, mcols) };
        debug_assert_eq!(dims[axis_pos], in_len);
        let outer: usize = dims[..axis_pos].iter().product();
        let inner: usize = dims[axis_pos + 1..].iter().product();
        let mut out = vec![0.0; outer * out_len * inner];
        for o in 0..outer {
            for q in 0..in_len {
                let src = &input[(o * in_len + q) * inner..(o * in_len + q + 1) * inner];
                for p in 0..out_len {
                    let coef = if transpose {
                        self.axis[q * mcols + p]
                    } else {
                        self.axis[p * mcols + q]
                    };
                    if coef == 0.0 {
                        continue;
                    }
                    let dst = &mut out[(o * out_len + p) * inner..(o * out_len + p + 1) * inner];
                    for (dv, sv) in dst.iter_mut().zip(src) {
                        *dv += coef * sv;
                    }
                }
            }
        }
        let mut new_dims = dims.to_vec();
        new_dims[axis_pos] = out_len;
        (out, new_dims)
    }
}

fn index_norm_sq(mut flat: usize, side: usize, d: usize) -> u64 {
    let mut sq = 0u64;
    for _ in 0..d {
        let c = (flat % side) as u64;
        sq += c * c;
        flat /= side;
    }
    sq
}

impl MomentMap for TensorChebMap {
    fn rows(&self) -> usize {
        (self.degree + 1).pow(self.d as u32)
    }

    fn cols(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) {
        let mut cur = z.to_vec();
        let mut dims = vec![self.side; self.d];
        for ax in 0..self.d {
            let (next, nd) = self.mode_product(&cur, &dims, ax, false);
            cur = next;
            dims = nd;
        }
        out.copy_from_slice(&cur);
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        let mut cur = y.to_vec();
        let mut dims = vec![self.degree + 1; self.d];
        for ax in 0..self.d {
            let (next, nd) = self.mode_product(&cur, &dims, ax, true);
            cur = next;
            dims = nd;
        }
        out.copy_from_slice(&cur);
    }

    fn column(&self, i: usize, out: &mut [f64]) {
        let mut coords = vec![0; self.d];
        let mut rest = i;
        for c in coords.iter_mut().rev() {
            *c = rest % self.side;
            rest /= self.side;
        }
        let side = self.degree + 1;
        for (flat, o) in out.iter_mut().enumerate() {
            let mut rest = flat;
            let mut v = 1.0;
            for &c in coords.iter().rev() {
                v *= self.axis[(rest % side) * self.side + c];
                rest /= side;
            }
            *o = v;
        }
    }
}

/// Private synthesis in two or three dimensions. `points` is flat,
/// `d` coordinates per point.
pub fn dp_synthesize_multi(points: &[f64], d: usize, cfg: &DpConfig, seed: u64) -> Result<DpOutput> {
    if !(2..=3).contains(&d) {
        return Err(Error::invalid(format!("dimension {d} must be 2 or 3")));
    }
    if points.len() % d != 0 {
        return Err(Error::invalid("point list does not split into points"));
    }
    let n = points.len() / d;
    if n < 2 {
        return Err(Error::invalid("need at least two data points"));
    }
    let budget = cfg.budget;
    let root = budget.scale(n)?.powf(1.0 / d as f64);
    let h = cfg.h.unwrap_or(root.ceil() as usize);
    let m = cfg.k.unwrap_or((2.0 * root).ceil() as usize);
    if h == 0 || m == 0 {
        return Err(Error::invalid("grid resolution and degree must be positive"));
    }
    let (points, clamped) = clamp_all(points)?;

    let side = 2 * h + 1;
    let mut hist = vec![0.0; side.pow(d as u32)];
    for p in points.chunks_exact(d) {
        let flat = p
            .iter()
            .fold(0, |acc, &x| acc * side + dist::nearest_uniform_index(x, h));
        hist[flat] += 1.0 / n as f64;
    }
    let map = TensorChebMap::new(h, m, d);
    let mut exact = vec![0.0; map.rows()];
    map.apply(&hist, &mut exact);

    let sigma2 = cfg
        .sigma2_override
        .unwrap_or_else(|| budget.sigma2_multi(n, m, d));
    let scales: Vec<f64> = (1..map.rows())
        .map(|flat| (index_norm_sq(flat, m + 1, d) as f64).sqrt())
        .collect();
    let noise = gaussian_noise_vector(&scales, sigma2, seed);
    let values = exact[1..].iter().zip(&noise).map(|(a, e)| a + e).collect();
    let noisy = NoisyMoments {
        dim: d,
        h,
        degree: m,
        values,
        variances: scales.iter().map(|s| s * sigma2).collect(),
        sigma2,
        seed,
    };
    let (distribution, solution) = release_from_moments(&noisy, &cfg.solver)?;
    let report = DpReport {
        n,
        dim: d,
        h,
        k: m,
        r: side,
        sigma2,
        clamped,
        gamma: solution.objective.max(0.0).sqrt(),
        rounding_bound: dist::uniform_rounding_bound(h, d),
        expected_bound: multi_expected_bound(n, budget, d),
        hp_bound_beta05: f64::NAN,
        objective: solution.objective,
        iterations: solution.iterations,
        converged: solution.converged,
    };
    Ok(DpOutput {
        distribution,
        noisy,
        report,
    })
}

/// `d ((1 + √ln(1.25/δ)) / (nε))^{1/d}`, the d-dimensional rate without
/// its constant.
pub fn multi_expected_bound(n: usize, budget: PrivacyBudget, d: usize) -> f64 {
    let base = (1.0 + (1.25 / budget.delta).ln().sqrt()) / (n as f64 * budget.epsilon);
    d as f64 * base.powf(1.0 / d as f64)
}

/// Weighted moment error `sqrt(Σ_K (m_K(p) - m_K(q))² / ‖K‖²)` between two
/// distributions on the cube under the normalized convention.
pub fn multi_moment_gamma(p: &DiscreteDistribution, q: &DiscreteDistribution, m: usize) -> Result<f64> {
    let mp = dist::cheb_moments_multi(p, m, Convention::Normalized)?;
    let mq = dist::cheb_moments_multi(q, m, Convention::Normalized)?;
    let mut acc = 0.0;
    for idx in MultiIndex::enumerate_box(p.dim(), m)? {
        let diff = mp.get(&idx).unwrap_or(0.0) - mq.get(&idx).unwrap_or(0.0);
        acc += diff * diff / idx.norm2_sq() as f64;
    }
    Ok(acc.sqrt())
}
