//! Moment regression over the probability simplex.
//!
//! [`recover_distribution`] solves
//!
//! ```text
//! min_z  Σ_j (1/j²) (m̂_j - Σ_i z_i T_j(x_i))²   s.t.  z ≥ 0, Σ z_i = 1
//! ```
//!
//! over the `g = ceil(k^1.5)` Chebyshev nodes `x_i`, and
//! [`solve_moment_lp`] finds any simplex point whose moments fall inside
//! per-degree tolerance bands. Both run accelerated projected gradient
//! descent with Euclidean projection onto the simplex; the band problem
//! minimizes the squared band violation.

use serde::{Deserialize, Serialize};

use crate::cheb::{self, Convention};
use crate::dist::{self, DiscreteDistribution, Grid, MomentErrorReport, MomentVector};
use crate::error::{Error, Result};
use crate::fourier::FourierMoments;
use crate::sampling;

/// Euclidean projection onto `{z ≥ 0, Σ z = 1}` by sorting and
/// thresholding.
pub fn simplex_project(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("projection input {x}")));
    }
    let mut out = vec![0.0; v.len()];
    let mut scratch = Vec::with_capacity(v.len());
    project_into(v, &mut out, &mut scratch);
    Ok(out)
}

fn project_into(v: &[f64], out: &mut [f64], sorted: &mut Vec<f64>) {
    sorted.clear();
    sorted.extend_from_slice(v);
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - theta).max(0.0);
    }
}

/// A linear map from grid weights to moments.
pub trait MomentMap {
    /// Number of moments.
    fn rows(&self) -> usize;
    /// Number of grid points.
    fn cols(&self) -> usize;
    /// `out = A z`.
    fn apply(&self, z: &[f64], out: &mut [f64]);
    /// `out = Aᵀ y`.
    fn apply_transpose(&self, y: &[f64], out: &mut [f64]);
    /// Column `i` of `A`.
    fn column(&self, i: usize, out: &mut [f64]);
}

/// Matrices above this many entries are applied on the fly rather than
/// stored.
const DENSE_LIMIT: usize = 1 << 22;

/// `A[j-1][i] = T_j(x_i)` for `j = 1..=k`.
///
/// Small matrices are stored. Larger ones are applied through an
/// oversampled FFT (relative error around `1e-12`), or with
/// [`ChebMomentMatrix::exact`] by running the three-term recurrence across
/// all nodes for every product.
#[derive(Clone, Debug)]
pub struct ChebMomentMatrix {
    nodes: Vec<f64>,
    k: usize,
    storage: Storage,
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Vec<f64>),
    /// Recurrence over all nodes.
    Stream,
    Fourier(FourierMoments),
    /// Recurrence over the upper half of a grid with `x_i = -x_{g-1-i}`,
    /// using `T_j(-x) = (-1)^j T_j(x)`.
    Mirrored { half: Vec<f64>, has_zero: bool },
}

impl ChebMomentMatrix {
    pub fn new(nodes: &[f64], k: usize) -> Self {
        if nodes.len() * k <= DENSE_LIMIT {
            return Self::exact(nodes, k);
        }
        Self {
            nodes: nodes.to_vec(),
            k,
            storage: Storage::Fourier(FourierMoments::new(nodes, k)),
        }
    }

    /// Exact products: stored when small, recomputed by recurrence
    /// otherwise.
    pub fn exact(nodes: &[f64], k: usize) -> Self {
        let g = nodes.len();
        let storage = if k * g <= DENSE_LIMIT {
            let mut a = vec![0.0; k * g];
            let mut col = vec![0.0; k + 1];
            for (i, &x) in nodes.iter().enumerate() {
                cheb::fill_t(x, &mut col);
                for j in 0..k {
                    a[j * g + i] = col[j + 1];
                }
            }
            Storage::Dense(a)
        } else if is_mirrored(nodes) {
            Storage::Mirrored {
                half: nodes[g - g / 2..].to_vec(),
                has_zero: g % 2 == 1,
            }
        } else {
            Storage::Stream
        };
        Self {
            nodes: nodes.to_vec(),
            k,
            storage,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

fn is_mirrored(nodes: &[f64]) -> bool {
    let g = nodes.len();
    (0..g / 2).all(|i| nodes[i] == -nodes[g - 1 - i])
        && (g % 2 == 0 || nodes[g / 2] == 0.0)
}

/// `T_j(0)`.
#[inline]
fn t_at_zero(j: usize) -> f64 {
    match j % 4 {
        0 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

const LANES: usize = 8;

/// Advances `prev <- 2 x cur - prev` and returns `Σ prev_i v_i`.
#[inline]
fn advance_dot(x: &[f64], prev: &mut [f64], cur: &[f64], v: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let split = x.len() - x.len() % LANES;
    for (((xc, pc), cc), vc) in x[..split]
        .chunks_exact(LANES)
        .zip(prev[..split].chunks_exact_mut(LANES))
        .zip(cur[..split].chunks_exact(LANES))
        .zip(v[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            let next = 2.0 * xc[l] * cc[l] - pc[l];
            pc[l] = next;
            acc[l] += next * vc[l];
        }
    }
    let mut tail = 0.0;
    for i in split..x.len() {
        let next = 2.0 * x[i] * cur[i] - prev[i];
        prev[i] = next;
        tail += next * v[i];
    }
    acc.iter().sum::<f64>() + tail
}

/// Advances `prev <- 2 x cur - prev` and accumulates `out += y prev`.
#[inline]
fn advance_axpy(x: &[f64], prev: &mut [f64], cur: &[f64], y: f64, out: &mut [f64]) {
    for (((xi, pi), ci), oi) in x.iter().zip(prev.iter_mut()).zip(cur).zip(out.iter_mut()) {
        let next = 2.0 * xi * ci - *pi;
        *pi = next;
        *oi += y * next;
    }
}

impl MomentMap for ChebMomentMatrix {
    fn rows(&self) -> usize {
        self.k
    }

    fn column(&self, i: usize, out: &mut [f64]) {
        let mut col = vec![0.0; self.k + 1];
        cheb::fill_t(self.nodes[i], &mut col);
        out.copy_from_slice(&col[1..]);
    }

    fn cols(&self) -> usize {
        self.nodes.len()
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) {
        let g = self.nodes.len();
        match &self.storage {
            Storage::Dense(a) => {
                for (row, o) in a.chunks_exact(g).zip(out.iter_mut()) {
                    *o = dot(row, z);
                }
            }
            Storage::Fourier(op) => op.apply(z, out),
            Storage::Stream => {
                let x = &self.nodes;
                let mut prev = vec![1.0; g];
                let mut cur = x.clone();
                out[0] = dot(&cur, z);
                for o in out.iter_mut().skip(1) {
                    *o = advance_dot(x, &mut prev, &cur, z);
                    std::mem::swap(&mut prev, &mut cur);
                }
            }
            Storage::Mirrored { half, has_zero } => {
                let h = half.len();
                let z0 = if *has_zero { z[g / 2] } else { 0.0 };
                // half[i] sits at index g - h + i, its mirror at h - 1 - i
                let mut sum = vec![0.0; h];
                let mut diff = vec![0.0; h];
                for i in 0..h {
                    let (p, m) = (z[g - h + i], z[h - 1 - i]);
                    sum[i] = p + m;
                    diff[i] = p - m;
                }
                let mut prev = vec![1.0; h];
                let mut cur = half.clone();
                out[0] = dot(&cur, &diff);
                for (idx, o) in out.iter_mut().enumerate().skip(1) {
                    let j = idx + 1;
                    let v = if j % 2 == 0 { &sum } else { &diff };
                    *o = advance_dot(half, &mut prev, &cur, v) + z0 * t_at_zero(j);
                    std::mem::swap(&mut prev, &mut cur);
                }
            }
        }
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        let g = self.nodes.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        match &self.storage {
            Storage::Dense(a) => {
                for (row, &yj) in a.chunks_exact(g).zip(y) {
                    for (o, &aij) in out.iter_mut().zip(row) {
                        *o += yj * aij;
                    }
                }
            }
            Storage::Fourier(op) => op.apply_transpose(y, out),
            Storage::Stream => {
                let x = &self.nodes;
                let mut prev = vec![1.0; g];
                let mut cur = x.clone();
                for (o, &c) in out.iter_mut().zip(&cur) {
                    *o += y[0] * c;
                }
                for &yj in y.iter().skip(1) {
                    advance_axpy(x, &mut prev, &cur, yj, out);
                    std::mem::swap(&mut prev, &mut cur);
                }
            }
            Storage::Mirrored { half, has_zero } => {
                let h = half.len();
                let mut even = vec![0.0; h];
                let mut odd: Vec<f64> = half.iter().map(|x| y[0] * x).collect();
                let mut prev = vec![1.0; h];
                let mut cur = half.clone();
                let mut at_zero = 0.0;
                for (idx, &yj) in y.iter().enumerate().skip(1) {
                    let j = idx + 1;
                    let acc = if j % 2 == 0 { &mut even } else { &mut odd };
                    advance_axpy(half, &mut prev, &cur, yj, acc);
                    std::mem::swap(&mut prev, &mut cur);
                    at_zero += yj * t_at_zero(j);
                }
                for i in 0..h {
                    out[g - h + i] = even[i] + odd[i];
                    out[h - 1 - i] = even[i] - odd[i];
                }
                if *has_zero {
                    out[g / 2] = at_zero;
                }
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solver knobs shared by the regression and band-feasibility problems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the relative objective decrease of an accepted step falls
    /// below this.
    pub tolerance: f64,
    /// Stop once the objective drops below this absolute floor.
    pub objective_floor: f64,
    pub max_iters: usize,
    /// Power iterations for the Lipschitz estimate.
    pub power_iters: usize,
    /// Multiplicative headroom on the Lipschitz estimate.
    pub lipschitz_headroom: f64,
    /// Stop once the Frank-Wolfe duality gap, an upper bound on the
    /// distance to the optimal objective, falls below this fraction of the
    /// objective. Zero disables the check.
    pub relative_gap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            objective_floor: 1e-24,
            max_iters: 10_000,
            power_iters: 50,
            lipschitz_headroom: 1.1,
            relative_gap: 0.0,
        }
    }
}

/// Output of the simplex-constrained solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    /// Weights on the grid, on the probability simplex.
    pub weights: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration; nonincreasing.
    pub trace: Vec<f64>,
    /// Last computed duality gap, if any.
    pub gap: Option<f64>,
}

/// Iterations between duality-gap evaluations.
const GAP_CHECK_EVERY: usize = 10;

/// Smooth convex loss on the moment vector `A z`.
trait MomentLoss {
    fn value(&self, az: &[f64]) -> f64;
    /// Writes `∂loss/∂(Az)` into `out`.
    fn gradient(&self, az: &[f64], out: &mut [f64]);
    /// Curvature bound of the loss in moment space (e.g. `2 max w_j`).
    fn curvature(&self) -> f64;
    /// Problem-specific early exit.
    fn done(&self, _az: &[f64]) -> bool {
        false
    }
}

struct WeightedSquares<'a> {
    target: &'a [f64],
    weights: &'a [f64],
}

impl MomentLoss for WeightedSquares<'_> {
    fn value(&self, az: &[f64]) -> f64 {
        az.iter()
            .zip(self.target)
            .zip(self.weights)
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum()
    }

    fn gradient(&self, az: &[f64], out: &mut [f64]) {
        for (((o, a), b), w) in out.iter_mut().zip(az).zip(self.target).zip(self.weights) {
            *o = 2.0 * w * (a - b);
        }
    }

    fn curvature(&self) -> f64 {
        2.0
    }
}

/// Squared violation of `|a_j - b_j| <= band_j`.
struct BandViolation<'a> {
    target: &'a [f64],
    /// Bands the penalty aims for, slightly inside the true ones.
    inner: Vec<f64>,
    bands: &'a [f64],
}

impl MomentLoss for BandViolation<'_> {
    fn value(&self, az: &[f64]) -> f64 {
        az.iter()
            .zip(self.target)
            .zip(&self.inner)
            .map(|((a, b), t)| ((a - b).abs() - t).max(0.0).powi(2))
            .sum()
    }

    fn gradient(&self, az: &[f64], out: &mut [f64]) {
        for (((o, a), b), t) in out.iter_mut().zip(az).zip(self.target).zip(&self.inner) {
            let r = a - b;
            *o = 2.0 * r.signum() * (r.abs() - t).max(0.0);
        }
    }

    fn curvature(&self) -> f64 {
        2.0
    }

    fn done(&self, az: &[f64]) -> bool {
        band_excess(az, self.target, self.bands) <= 0.0
    }
}

fn band_excess(az: &[f64], target: &[f64], bands: &[f64]) -> f64 {
    az.iter()
        .zip(target)
        .zip(bands)
        .map(|((a, b), t)| (a - b).abs() - t)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue of `Aᵀ D A` by power iteration, where `D` is the
/// diagonal `diag`.
fn gram_top_eigenvalue<M: MomentMap>(map: &M, diag: &[f64], iters: usize) -> f64 {
    let n = map.cols();
    let mut rng = sampling::rng_from_seed(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| sampling::open_uniform(&mut rng) - 0.5).collect();
    let mut av = vec![0.0; map.rows()];
    let mut w = vec![0.0; n];
    let mut lambda = 0.0f64;
    for _ in 0..iters.max(1) {
        let norm = dot(&v, &v).sqrt();
        if norm == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        map.apply(&v, &mut av);
        av.iter_mut().zip(diag).for_each(|(a, d)| *a *= d);
        map.apply_transpose(&av, &mut w);
        lambda = lambda.max(dot(&v, &w));
        std::mem::swap(&mut v, &mut w);
    }
    lambda
}

/// Monotone accelerated projected gradient with function-value restarts.
fn minimize_on_simplex<M: MomentMap, L: MomentLoss>(
    map: &M,
    loss: &L,
    curvature_diag: &[f64],
    start: Vec<f64>,
    opts: &SolverOptions,
) -> QpSolution {
    let (rows, cols) = (map.rows(), map.cols());
    let lambda = gram_top_eigenvalue(map, curvature_diag, opts.power_iters);
    let lipschitz = (loss.curvature() * lambda * opts.lipschitz_headroom).max(f64::MIN_POSITIVE);
    let step = 1.0 / lipschitz;

    let mut x = start;
    let mut ax = vec![0.0; rows];
    map.apply(&x, &mut ax);
    let mut fx = loss.value(&ax);
    let mut trace = Vec::new();
    if fx <= opts.objective_floor || loss.done(&ax) {
        return QpSolution {
            weights: x,
            objective: fx,
            iterations: 0,
            converged: true,
            trace,
            gap: None,
        };
    }

    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t = 1.0f64;
    let mut grad_m = vec![0.0; rows];
    let mut grad = vec![0.0; cols];
    let mut trial = vec![0.0; cols];
    let mut a_trial = vec![0.0; rows];
    let mut scratch = Vec::with_capacity(cols);
    let mut converged = false;
    let mut iterations = 0;
    let mut gap = None;

    for it in 1..=opts.max_iters {
        iterations = it;
        loss.gradient(&ay, &mut grad_m);
        map.apply_transpose(&grad_m, &mut grad);
        for ((g, yi), gi) in trial.iter_mut().zip(&y).zip(&grad) {
            *g = yi - step * gi;
        }
        let unprojected = std::mem::take(&mut trial);
        trial = vec![0.0; cols];
        project_into(&unprojected, &mut trial, &mut scratch);
        map.apply(&trial, &mut a_trial);
        let f_trial = loss.value(&a_trial);

        if f_trial > fx {
            // momentum overshoot: restart from the incumbent
            t = 1.0;
            y.copy_from_slice(&x);
            ay.copy_from_slice(&ax);
            trace.push(fx);
            continue;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..cols {
            y[i] = trial[i] + beta * (trial[i] - x[i]);
        }
        for j in 0..rows {
            ay[j] = a_trial[j] + beta * (a_trial[j] - ax[j]);
        }
        let decrease = fx - f_trial;
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut ax, &mut a_trial);
        fx = f_trial;
        t = t_next;
        trace.push(fx);

        if fx <= opts.objective_floor
            || loss.done(&ax)
            || (decrease > 0.0 && decrease <= opts.tolerance * fx)
        {
            converged = true;
            break;
        }
        if opts.relative_gap > 0.0 && it % GAP_CHECK_EVERY == 0 {
            loss.gradient(&ax, &mut grad_m);
            map.apply_transpose(&grad_m, &mut grad);
            let g = frank_wolfe_gap(&x, &grad);
            gap = Some(g);
            if g <= opts.relative_gap * fx {
                converged = true;
                break;
            }
        }
    }

    QpSolution {
        weights: x,
        objective: fx,
        iterations,
        converged,
        trace,
        gap,
    }
}

/// `⟨∇f(x), x⟩ - min_i ∇f(x)_i`, which bounds `f(x) - min f` over the
/// simplex for convex `f`.
fn frank_wolfe_gap(x: &[f64], grad: &[f64]) -> f64 {
    let min = grad.iter().copied().fold(f64::INFINITY, f64::min);
    (dot(x, grad) - min).max(0.0)
}

/// Minimizes `Σ_j w_j ((A z)_j - b_j)²` over the simplex, starting from the
/// uniform distribution.
pub fn solve_simplex_qp<M: MomentMap>(
    map: &M,
    target: &[f64],
    weights: &[f64],
    opts: &SolverOptions,
) -> Result<QpSolution> {
    if target.len() != map.rows() || weights.len() != map.rows() {
        return Err(Error::Dimension {
            expected: map.rows(),
            got: target.len().min(weights.len()),
        });
    }
    let n = map.cols();
    let loss = WeightedSquares { target, weights };
    let mut solution = minimize_on_simplex(map, &loss, weights, vec![1.0 / n as f64; n], opts);
    if solution.objective > opts.objective_floor {
        polish_on_support(map, &loss, &mut solution, opts);
    }
    Ok(solution)
}

/// Support sizes up to which the equality-constrained refit is attempted.
const POLISH_MAX_SUPPORT: usize = 400;
const POLISH_MAX_WORK: usize = 200_000_000;

/// Re-solves the regression restricted to the current support with only
/// the sum constraint, and keeps the result when it is nonnegative and
/// lowers the objective.
fn polish_on_support<M: MomentMap>(
    map: &M,
    loss: &WeightedSquares<'_>,
    solution: &mut QpSolution,
    opts: &SolverOptions,
) {
    use nalgebra::{DMatrix, DVector};

    let support: Vec<usize> = (0..solution.weights.len())
        .filter(|&i| solution.weights[i] > 1e-12)
        .collect();
    let s = support.len();
    let rows = map.rows();
    if s == 0 || s > POLISH_MAX_SUPPORT || rows.saturating_mul(s * s) > POLISH_MAX_WORK {
        return;
    }
    let mut cols = DMatrix::<f64>::zeros(rows, s);
    let mut col = vec![0.0; rows];
    for (c, &i) in support.iter().enumerate() {
        map.column(i, &mut col);
        for (r, v) in col.iter().enumerate() {
            cols[(r, c)] = v * loss.weights[r].sqrt();
        }
    }
    let rhs: DVector<f64> =
        DVector::from_iterator(rows, (0..rows).map(|r| loss.target[r] * loss.weights[r].sqrt()));
    let mut kkt = DMatrix::<f64>::zeros(s + 1, s + 1);
    kkt.view_mut((0, 0), (s, s)).copy_from(&(cols.transpose() * &cols));
    for c in 0..s {
        kkt[(c, s)] = 1.0;
        kkt[(s, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(s + 1);
    b.rows_mut(0, s).copy_from(&(cols.transpose() * rhs));
    b[s] = 1.0;
    let Ok(x) = kkt.svd(true, true).solve(&b, 1e-14) else {
        return;
    };
    if x.iter().take(s).any(|v| !v.is_finite() || *v < 0.0) {
        return;
    }
    let mut refit = vec![0.0; solution.weights.len()];
    let total: f64 = x.iter().take(s).sum();
    for (c, &i) in support.iter().enumerate() {
        refit[i] = x[c] / total;
    }
    let mut az = vec![0.0; rows];
    map.apply(&refit, &mut az);
    let value = loss.value(&az);
    if value < solution.objective {
        solution.weights = refit;
        solution.objective = value;
        solution.trace.push(value);
        if value <= opts.objective_floor {
            solution.converged = true;
        }
    }
}

/// `1/j²` for `j = 1..=k`.
pub fn inverse_square_weights(k: usize) -> Vec<f64> {
    (1..=k).map(|j| 1.0 / (j * j) as f64).collect()
}

/// `ceil(k^1.5)` computed exactly.
pub fn default_grid_size(k: usize) -> usize {
    let cube = (k as u128).pow(3);
    let mut s = (cube as f64).sqrt() as u128;
    while s * s > cube {
        s -= 1;
    }
    while s * s < cube {
        s += 1;
    }
    s as usize
}

/// `ceil(k^1.5 · sqrt(1 + ln k))`, the grid size used with the band
/// constraints.
pub fn band_grid_size(k: usize) -> usize {
    let kf = k as f64;
    (kf.powf(1.5) * (1.0 + kf.ln()).sqrt()).ceil() as usize
}

/// Configuration of the moment regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub k: usize,
    /// Number of Chebyshev nodes in the grid.
    pub g: usize,
    pub solver: SolverOptions,
}

impl RecoveryConfig {
    /// Defaults: `g = ceil(k^1.5)`, tolerance `1e-10`, `max_iters = 200 g`.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("moment degree must be positive"));
        }
        let g = default_grid_size(k);
        Ok(Self {
            k,
            g,
            solver: SolverOptions {
                max_iters: 200 * g,
                ..SolverOptions::default()
            },
        })
    }

    /// Grid sized for the band-constrained variant,
    /// `g = ceil(k^1.5 sqrt(1 + ln k))`.
    pub fn for_bands(k: usize) -> Result<Self> {
        let mut cfg = Self::new(k)?;
        cfg.g = band_grid_size(k);
        cfg.solver.max_iters = 200 * cfg.g;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.g < self.k {
            return Err(Error::invalid(format!(
                "need g >= k >= 1, got k = {}, g = {}",
                self.k, self.g
            )));
        }
        if !(self.solver.tolerance > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        Ok(())
    }
}

/// Weighted moment regression on the Chebyshev grid for plain moments
/// `m̂_1..=m̂_k`.
pub fn solve_weighted_qp(m: &MomentVector, cfg: &RecoveryConfig) -> Result<(Grid, QpSolution)> {
    cfg.validate()?;
    require_plain(m)?;
    if m.k() < cfg.k {
        return Err(Error::Dimension {
            expected: cfg.k,
            got: m.k(),
        });
    }
    let grid = Grid::chebyshev(cfg.g)?;
    let map = ChebMomentMatrix::new(grid.points(), cfg.k);
    let weights = inverse_square_weights(cfg.k);
    let solution = solve_simplex_qp(&map, &m.values()[..cfg.k], &weights, &cfg.solver)?;
    Ok((grid, solution))
}

fn require_plain(m: &MomentVector) -> Result<()> {
    if m.convention() != Convention::Plain {
        return Err(Error::Convention {
            expected: Convention::Plain.name(),
            got: m.convention().name(),
        });
    }
    Ok(())
}

/// A recovered distribution with solver diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub distribution: DiscreteDistribution,
    pub grid_size: usize,
    pub solution: QpSolution,
    /// Moment error of the output against the input moments.
    pub report: MomentErrorReport,
}

impl Recovery {
    pub fn converged(&self) -> bool {
        self.solution.converged
    }
}

/// Recovers a distribution from plain moment estimates `m̂_1..=m̂_k`.
/// Non-convergence is reported through [`Recovery::converged`], not as an
/// error.
pub fn recover_distribution(m: &MomentVector, cfg: &RecoveryConfig) -> Result<Recovery> {
    let (grid, solution) = solve_weighted_qp(m, cfg)?;
    let distribution = weights_to_distribution(&grid, &solution.weights)?;
    let achieved = dist::cheb_moments(&distribution, cfg.k, Convention::Plain)?;
    let report = dist::moment_error_gamma(&m.truncated(cfg.k), &achieved)?;
    Ok(Recovery {
        distribution,
        grid_size: grid.len(),
        solution,
        report,
    })
}

/// Builds the pruned output distribution from solver weights.
pub(crate) fn weights_to_distribution(grid: &Grid, weights: &[f64]) -> Result<DiscreteDistribution> {
    let total: f64 = weights.iter().sum();
    let weights = weights.iter().map(|w| w / total).collect();
    Ok(grid.distribution(weights)?.pruned())
}

/// Result of the band-feasibility search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSolution {
    pub distribution: DiscreteDistribution,
    pub feasible: bool,
    /// `max_j (|m_j(q) - m̂_j| - tol_j)`; nonpositive when feasible.
    pub max_violation: f64,
    pub iterations: usize,
}

/// Shrink factor applied to the bands inside the penalty so that the
/// iterates become strictly feasible for the true bands.
const BAND_MARGIN: f64 = 0.98;

/// Residual violation above which the band problem is declared infeasible.
pub const INFEASIBILITY_THRESHOLD: f64 = 1e-9;

/// Finds a distribution on the Chebyshev grid with
/// `|E_q[T_j] - m̂_j| <= tol_j` for all `j`.
pub fn solve_moment_lp(m: &MomentVector, tol: &[f64], cfg: &RecoveryConfig) -> Result<BandSolution> {
    cfg.validate()?;
    require_plain(m)?;
    if tol.len() != cfg.k || m.k() < cfg.k {
        return Err(Error::Dimension {
            expected: cfg.k,
            got: tol.len(),
        });
    }
    if let Some(t) = tol.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::invalid(format!("band tolerance {t} must be positive")));
    }
    let grid = Grid::chebyshev(cfg.g)?;
    let map = ChebMomentMatrix::new(grid.points(), cfg.k);
    let target = &m.values()[..cfg.k];
    let loss = BandViolation {
        target,
        inner: tol.iter().map(|t| t * BAND_MARGIN).collect(),
        bands: tol,
    };
    let n = grid.len();
    let ones = vec![1.0; cfg.k];
    let solution = minimize_on_simplex(&map, &loss, &ones, vec![1.0 / n as f64; n], &cfg.solver);
    let mut az = vec![0.0; cfg.k];
    map.apply(&solution.weights, &mut az);
    let max_violation = band_excess(&az, target, tol);
    Ok(BandSolution {
        distribution: weights_to_distribution(&grid, &solution.weights)?,
        feasible: max_violation <= INFEASIBILITY_THRESHOLD,
        max_violation,
        iterations: solution.iterations,
    })
}
