//! Spectral density estimation from matrix-vector products.
//!
//! The pipeline bounds `‖A‖₂` by power iteration, rescales the operator
//! into `[-1, 1]`, estimates Chebyshev moments of the spectrum with
//! Rademacher probes pushed through the three-term recurrence, and fits a
//! distribution on Chebyshev nodes whose moments fall inside per-degree
//! tolerance bands. When the probe budget would reach `n` products anyway,
//! the matrix is read column by column and diagonalized instead.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::cheb::Convention;
use crate::dist::{DiscreteDistribution, MomentVector};
use crate::error::{Error, Result};
use crate::recovery::{self, RecoveryConfig};
use crate::sampling;

/// A symmetric matrix seen only through products `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// Writes `A x` into `y` and counts one product.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Products performed so far.
    fn matvec_count(&self) -> u64;
    /// Whether `apply` may be called from several threads at once.
    fn concurrent(&self) -> bool {
        true
    }
}

/// Monotone product counter shared by the operator implementations.
#[derive(Debug, Default)]
pub struct MatvecCounter(AtomicU64);

impl MatvecCounter {
    pub fn tick(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for MatvecCounter {
    fn clone(&self) -> Self {
        Self(AtomicU64::new(self.get()))
    }
}

/// Dense row-major symmetric matrix.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    n: usize,
    data: Vec<f64>,
    counter: MatvecCounter,
}

impl DenseOperator {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {v}")));
        }
        Ok(Self {
            n,
            data,
            counter: MatvecCounter::default(),
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self::new(n, data)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.counter.tick();
        for (row, yi) in self.data.chunks_exact(self.n).zip(y.iter_mut()) {
            *yi = recovery::dot(row, x);
        }
    }

    fn matvec_count(&self) -> u64 {
        self.counter.get()
    }
}

/// Diagonal matrix, applied in `O(n)`.
#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
    counter: MatvecCounter,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self {
            diag,
            counter: MatvecCounter::default(),
        }
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.counter.tick();
        for ((yi, d), xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = d * xi;
        }
    }

    fn matvec_count(&self) -> u64 {
        self.counter.get()
    }
}

/// Compressed sparse row matrix holding both triangles.
#[derive(Clone, Debug)]
pub struct CsrOperator {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    counter: MatvecCounter,
}

impl CsrOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, v) in &sorted {
            if r >= n || c >= n {
                return Err(Error::invalid(format!("entry ({r}, {c}) outside a {n} x {n} matrix")));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("matrix entry {v}")));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            n,
            indptr,
            indices,
            values,
            counter: MatvecCounter::default(),
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for r in 0..self.n {
            for p in self.indptr[r]..self.indptr[r + 1] {
                out[r * self.n + self.indices[p]] = self.values[p];
            }
        }
        out
    }
}

impl LinearOperator for CsrOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.counter.tick();
        for (r, yr) in y.iter_mut().enumerate() {
            let span = self.indptr[r]..self.indptr[r + 1];
            *yr = self.indices[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, v)| v * x[c])
                .sum();
        }
    }

    fn matvec_count(&self) -> u64 {
        self.counter.get()
    }
}

/// `A / s`, counting products on the wrapped operator.
pub struct ScaledOperator<'a> {
    inner: &'a dyn LinearOperator,
    inv_scale: f64,
}

impl<'a> ScaledOperator<'a> {
    pub fn new(inner: &'a dyn LinearOperator, scale: f64) -> Self {
        Self {
            inner,
            inv_scale: 1.0 / scale,
        }
    }
}

impl LinearOperator for ScaledOperator<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        y.iter_mut().for_each(|v| *v *= self.inv_scale);
    }

    fn matvec_count(&self) -> u64 {
        self.inner.matvec_count()
    }

    fn concurrent(&self) -> bool {
        self.inner.concurrent()
    }
}

/// Floor returned for the zero operator.
pub const ZERO_NORM_FLOOR: f64 = 1e-30;

/// Output of [`power_method_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    /// Twice the largest `‖Ax‖/‖x‖` seen; `‖A‖₂ ≤ s ≤ 2‖A‖₂` once the
    /// iteration has found the top eigenvector direction.
    pub s: f64,
    pub iterations: usize,
    /// Set when every product vanished.
    pub zero_operator: bool,
}

/// `ceil(10 ln n)`, at least one.
pub fn default_power_iters(n: usize) -> usize {
    ((10.0 * (n.max(2) as f64).ln()).ceil() as usize).max(1)
}

/// Power iteration from a Rademacher start vector.
pub fn power_method_bound(op: &dyn LinearOperator, iters: usize, seed: u64) -> Result<NormBound> {
    if iters == 0 {
        return Err(Error::invalid("power iteration needs at least one step"));
    }
    let n = op.dim();
    let mut rng = sampling::rng_from_seed(seed);
    let mut x = sampling::rademacher(&mut rng, n);
    let mut y = vec![0.0; n];
    let mut best = 0.0f64;
    for _ in 0..iters {
        let xn = norm(&x);
        op.apply(&x, &mut y);
        let yn = norm(&y);
        best = best.max(yn / xn);
        if yn == 0.0 {
            break;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / yn;
        }
    }
    Ok(if best > 0.0 {
        NormBound {
            s: 2.0 * best,
            iterations: iters,
            zero_operator: false,
        }
    } else {
        NormBound {
            s: ZERO_NORM_FLOOR,
            iterations: iters,
            zero_operator: true,
        }
    })
}

fn norm(v: &[f64]) -> f64 {
    recovery::dot(v, v).sqrt()
}

/// Parameters of the estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    /// Target accuracy relative to the norm bound.
    pub epsilon: f64,
    /// Failure probability.
    pub delta: f64,
    /// Constant in the probe schedule.
    pub probe_constant: f64,
    /// `k = ceil(degree_constant / ε)`.
    pub degree_constant: f64,
    pub seed: u64,
    /// Power iterations; `None` means `ceil(10 ln n)`.
    pub power_iters: Option<usize>,
    /// Always use probes, even when reading the matrix would be cheaper.
    pub force_probes: bool,
}

impl SdeConfig {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            epsilon,
            delta,
            probe_constant: 16.0,
            degree_constant: 80.0,
            seed,
            power_iters: None,
            force_probes: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta {} must lie in (0, 1)", self.delta)));
        }
        if !(self.probe_constant > 0.0 && self.degree_constant > 0.0) {
            return Err(Error::invalid("schedule constants must be positive"));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        ((self.degree_constant / self.epsilon).ceil() as usize).max(1)
    }
}

/// Per-degree probe counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSchedule {
    pub k: usize,
    /// `1 / (k sqrt(1 + ln k))`.
    pub gamma: f64,
    /// `δ / k`.
    pub alpha: f64,
    /// `ℓ_1 ≥ ℓ_2 ≥ ... ≥ ℓ_k`.
    pub probes: Vec<usize>,
}

impl ProbeSchedule {
    /// `ℓ_j = ceil(1 + C ln²(1/α) / (n j γ²))`.
    pub fn new(n: usize, k: usize, delta: f64, constant: f64) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::invalid("schedule needs n >= 1 and k >= 1"));
        }
        let kf = k as f64;
        let gamma = 1.0 / (kf * (1.0 + kf.ln()).sqrt());
        let alpha = delta / kf;
        let log_sq = (1.0 / alpha).ln().powi(2);
        let probes = (1..=k)
            .map(|j| (1.0 + constant * log_sq / (n as f64 * j as f64 * gamma * gamma)).ceil() as usize)
            .collect();
        Ok(Self {
            k,
            gamma,
            alpha,
            probes,
        })
    }

    /// Products needed when each probe runs the recurrence up to the
    /// highest degree that uses it: `Σ_j ℓ_j`.
    pub fn matvecs(&self) -> u64 {
        self.probes.iter().map(|&l| l as u64).sum()
    }
}

/// Hutchinson estimates `m̂_j = (1/(ℓ_j n)) Σ_{i < ℓ_j} g_iᵀ T_j(A) g_i` of
/// the plain moments of the spectrum of `op`, whose norm must be at most
/// one. Probe `i` is a Rademacher vector from stream `derive_seed(seed, i)`
/// and runs the recurrence up to the largest `j` with `ℓ_j > i`.
pub fn hutchinson_cheb_moments(
    op: &dyn LinearOperator,
    schedule: &ProbeSchedule,
    seed: u64,
) -> Result<(MomentVector, u64)> {
    let n = op.dim();
    let k = schedule.k;
    let before = op.matvec_count();
    let mut sums = vec![0.0; k];
    let max_probes = schedule.probes.first().copied().unwrap_or(0);
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    for i in 0..max_probes {
        let depth = schedule.probes.partition_point(|&l| l > i);
        let mut rng = sampling::rng_from_seed(sampling::derive_seed(seed, i as u64));
        let g = sampling::rademacher(&mut rng, n);
        prev.copy_from_slice(&g);
        op.apply(&g, &mut cur);
        sums[0] += recovery::dot(&g, &cur);
        for s in sums.iter_mut().take(depth).skip(1) {
            op.apply(&cur, &mut next);
            for (nx, pv) in next.iter_mut().zip(&prev) {
                *nx = 2.0 * *nx - pv;
            }
            *s += recovery::dot(&g, &next);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    let values = sums
        .iter()
        .zip(&schedule.probes)
        .map(|(s, &l)| s / (l as f64 * n as f64))
        .collect();
    Ok((
        MomentVector::new(values, Convention::Plain)?,
        op.matvec_count() - before,
    ))
}

/// `min{n, (1/ε)(1 + ln²(1/ε) ln²(1/(εδ)) / (nε))}`, the product budget
/// without its constant.
pub fn matvec_budget(n: usize, epsilon: f64, delta: f64) -> f64 {
    let nf = n as f64;
    let inner = 1.0
        + (1.0 / epsilon).ln().powi(2) * (1.0 / (epsilon * delta)).ln().powi(2) / (nf * epsilon);
    nf.min(inner / epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeMethod {
    /// Matrix read through `n` basis products and diagonalized.
    Exact,
    /// Probe moments and band fitting.
    Moments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeReport {
    pub n: usize,
    pub method: SdeMethod,
    /// Norm bound used for rescaling.
    pub s: f64,
    pub zero_operator: bool,
    pub k: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// Chebyshev nodes in the fitting grid (zero on the exact path).
    pub grid_size: usize,
    /// Products used, power iteration included.
    pub matvecs: u64,
    /// Products the probe path would have needed.
    pub planned_matvecs: u64,
    pub budget_formula_value: f64,
    pub lp_feasible: bool,
    pub max_violation: f64,
    /// Set when the bands had to be widened to reach feasibility.
    pub tolerance_doubled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeOutput {
    pub distribution: DiscreteDistribution,
    pub report: SdeReport,
}

/// Estimates the spectral density of `op` to Wasserstein-1 accuracy
/// `ε · S`, where `S` is the reported norm bound.
pub fn estimate_spectral_density(op: &dyn LinearOperator, cfg: &SdeConfig) -> Result<SdeOutput> {
    cfg.validate()?;
    let n = op.dim();
    if n == 0 {
        return Err(Error::invalid("empty operator"));
    }
    let start = op.matvec_count();
    let k = cfg.degree();
    let schedule = ProbeSchedule::new(n, k, cfg.delta, cfg.probe_constant)?;
    let power_iters = cfg.power_iters.unwrap_or_else(|| default_power_iters(n));
    let planned = schedule.matvecs() + power_iters as u64;
    let budget = matvec_budget(n, cfg.epsilon, cfg.delta);

    let exact = !cfg.force_probes && (cfg.epsilon <= 1.0 / n as f64 || planned >= n as u64);
    if exact {
        let dense = read_dense(op);
        let eig = nalgebra::DMatrix::from_row_slice(n, n, &dense)
            .symmetric_eigen()
            .eigenvalues;
        let values: Vec<f64> = eig.iter().copied().collect();
        let s = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let distribution = spectral_distribution(values)?;
        return Ok(SdeOutput {
            distribution,
            report: SdeReport {
                n,
                method: SdeMethod::Exact,
                s,
                zero_operator: s == 0.0,
                k,
                gamma: schedule.gamma,
                alpha: schedule.alpha,
                grid_size: 0,
                matvecs: op.matvec_count() - start,
                planned_matvecs: planned,
                budget_formula_value: budget,
                lp_feasible: true,
                max_violation: 0.0,
                tolerance_doubled: false,
            },
        });
    }

    let bound = power_method_bound(op, power_iters, sampling::derive_seed(cfg.seed, u64::MAX))?;
    let scaled = ScaledOperator::new(op, bound.s);
    let (moments, _) = hutchinson_cheb_moments(&scaled, &schedule, cfg.seed)?;

    let rc = RecoveryConfig::for_bands(k)?;
    let node_term = (2.0 * std::f64::consts::PI).sqrt() / rc.g as f64;
    let mut tol: Vec<f64> = (1..=k)
        .map(|j| (j as f64).sqrt() * schedule.gamma + j as f64 * node_term)
        .collect();
    let mut fit = recovery::solve_moment_lp(&moments, &tol, &rc)?;
    let mut doubled = false;
    if !fit.feasible {
        log::warn!(
            "band fit infeasible (violation {:.3e}); doubling the tolerances",
            fit.max_violation
        );
        tol.iter_mut().for_each(|t| *t *= 2.0);
        fit = recovery::solve_moment_lp(&moments, &tol, &rc)?;
        doubled = true;
    }
    let distribution = fit.distribution.scaled(bound.s);
    Ok(SdeOutput {
        distribution,
        report: SdeReport {
            n,
            method: SdeMethod::Moments,
            s: bound.s,
            zero_operator: bound.zero_operator,
            k,
            gamma: schedule.gamma,
            alpha: schedule.alpha,
            grid_size: rc.g,
            matvecs: op.matvec_count() - start,
            planned_matvecs: planned,
            budget_formula_value: budget,
            lp_feasible: fit.feasible,
            max_violation: fit.max_violation,
            tolerance_doubled: doubled,
        },
    })
}

/// Reads `A` through its products with the standard basis.
fn read_dense(op: &dyn LinearOperator) -> Vec<f64> {
    let n = op.dim();
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut dense = vec![0.0; n * n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            dense[i * n + j] = col[i];
        }
    }
    // symmetrize away rounding in the products
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (dense[i * n + j] + dense[j * n + i]);
            dense[i * n + j] = avg;
            dense[j * n + i] = avg;
        }
    }
    dense
}

/// Uniform distribution on eigenvalues, which need not lie in `[-1, 1]`.
fn spectral_distribution(values: Vec<f64>) -> Result<DiscreteDistribution> {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let unit: Vec<f64> = values.iter().map(|v| v / scale).collect();
    Ok(DiscreteDistribution::uniform(1, unit)?.scaled(scale))
}

/// Spectral density of a dense symmetric matrix by cyclic Jacobi rotations,
/// run until the off-diagonal Frobenius norm is at most `1e-10` times the
/// full norm.
pub fn exact_spectral_density(n: usize, data: &[f64]) -> Result<DiscreteDistribution> {
    spectral_distribution(jacobi_eigenvalues(n, data)?)
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(n: usize, data: &[f64]) -> Result<Vec<f64>> {
    if data.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: data.len(),
        });
    }
    let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (data[i * n + j] - data[j * n + i]).abs() > 1e-8 * scale {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut a = data.to_vec();
    let total: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = 1e-10 * total.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_method_examples() {
        let id = DiagonalOperator::new(vec![1.0; 8]);
        let b = power_method_bound(&id, 5, 1).unwrap();
        assert_eq!(b.s, 2.0);
        let d = DiagonalOperator::new(vec![3.0, 1.0]);
        let b = power_method_bound(&d, 60, 1).unwrap();
        assert!((3.0..=6.0).contains(&b.s));
        let d2 = DiagonalOperator::new(vec![6.0, 2.0]);
        assert_eq!(power_method_bound(&d2, 60, 1).unwrap().s, 2.0 * b.s);
        let z = DiagonalOperator::new(vec![0.0; 3]);
        let b = power_method_bound(&z, 4, 1).unwrap();
        assert!(b.zero_operator && b.s == ZERO_NORM_FLOOR);
    }

    #[test]
    fn identity_moments_are_one() {
        let id = DiagonalOperator::new(vec![1.0; 16]);
        let sched = ProbeSchedule {
            k: 6,
            gamma: 0.1,
            alpha: 0.1,
            probes: vec![3, 2, 2, 1, 1, 1],
        };
        let (m, count) = hutchinson_cheb_moments(&id, &sched, 5).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
        assert_eq!(count, sched.matvecs());
        let pm = DiagonalOperator::new(vec![1.0, -1.0]);
        let (m, _) = hutchinson_cheb_moments(&pm, &sched, 5).unwrap();
        assert_eq!(m.get(2), 1.0);
        assert_eq!(m.get(4), 1.0);
    }

    #[test]
    fn schedule_is_nonincreasing() {
        let s = ProbeSchedule::new(64, 32, 0.1, 16.0).unwrap();
        assert!(s.probes.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.probes.iter().all(|&l| l >= 2));
    }

    #[test]
    fn jacobi_small_cases() {
        let e = jacobi_eigenvalues(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
        let e = jacobi_eigenvalues(3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(e, vec![-1.0, 0.5, 2.0]);
        assert!(jacobi_eigenvalues(2, &[0.0, 1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn csr_matches_dense() {
        let trip = [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (2, 2, -1.0), (2, 2, 0.5)];
        let csr = CsrOperator::from_triplets(3, &trip).unwrap();
        assert_eq!(csr.nnz(), 4);
        let dense = DenseOperator::new(3, csr.to_dense()).unwrap();
        let x = [1.0, -2.0, 3.0];
        let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
        csr.apply(&x, &mut a);
        dense.apply(&x, &mut b);
        assert_eq!(a, b);
        assert_eq!(csr.matvec_count(), 1);
    }

    #[test]
    fn exact_path_for_small_matrices() {
        let op = DiagonalOperator::new(vec![0.5, -0.25, 0.75, 0.0]);
        let cfg = SdeConfig::new(0.1, 0.1, 3).unwrap();
        let out = estimate_spectral_density(&op, &cfg).unwrap();
        assert_eq!(out.report.method, SdeMethod::Exact);
        assert_eq!(out.report.matvecs, 4);
        let truth = DiscreteDistribution::uniform(1, vec![0.5, -0.25, 0.75, 0.0]).unwrap();
        assert!(crate::dist::w1_distance(&truth, &out.distribution).unwrap() < 1e-12);
    }
}
