//! Learning a population of coin biases.
//!
//! Each of `N` coins with unknown bias `p_i` is tossed `t` times. The counts
//! of heads are summarized by the fingerprint, and the mixing distribution
//! of the biases is estimated by nonparametric maximum likelihood over a
//! uniform grid of `[0, 1]`. The naive estimator places mass `1/N` at each
//! empirical bias `X_i / t`.
//!
//! The conversion from shifted Chebyshev polynomials `T̃_m(x) = T_m(2x − 1)`
//! to the degree-`t` Bernstein basis is also provided, together with the
//! coefficient bound `(t + 1) e^{m²/t}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cheb::{self, ChebCoefficients};
use crate::dist::{self, DiscreteDistribution};
use crate::error::{Error, Result};

/// Default number of grid points of `[0, 1]` for the NPMLE.
pub const DEFAULT_GRID: usize = 1000;

/// Head counts of `N` coins tossed `t` times each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    t: usize,
    counts: Vec<u64>,
    coins: u64,
}

impl Fingerprint {
    pub fn from_counts(t: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != t + 1 {
            return Err(Error::Dimension { expected: t + 1, got: counts.len() });
        }
        let coins: u64 = counts.iter().sum();
        if coins == 0 {
            return Err(Error::invalid("fingerprint of zero coins"));
        }
        Ok(Self { t, counts, coins })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `n_s` for `s = 0..=t`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn coins(&self) -> u64 {
        self.coins
    }

    /// `h_s = n_s / N`.
    pub fn fractions(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.coins as f64).collect()
    }

    /// The head count holding every coin, if there is one.
    pub fn degenerate_bin(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c == self.coins)
    }
}

pub fn fingerprint(observations: &[u64], t: usize) -> Result<Fingerprint> {
    let mut counts = vec![0u64; t + 1];
    for (i, &x) in observations.iter().enumerate() {
        if x as usize > t {
            return Err(Error::invalid(format!(
                "observation {i} is {x}, outside 0..={t}"
            )));
        }
        counts[x as usize] += 1;
    }
    Fingerprint::from_counts(t, counts)
}

/// Uniform distribution on the empirical biases `X_i / t`.
pub fn naive_estimator(observations: &[u64], t: usize) -> Result<DiscreteDistribution> {
    if t == 0 {
        return Err(Error::invalid("t must be positive"));
    }
    if let Some(&x) = observations.iter().find(|&&x| x as usize > t) {
        return Err(Error::invalid(format!("observation {x} is outside 0..={t}")));
    }
    DiscreteDistribution::uniform(1, observations.iter().map(|&x| x as f64 / t as f64).collect())
}

/// Draws `X ~ Binomial(t, p)` by counting heads.
pub fn toss<R: Rng>(rng: &mut R, t: usize, p: f64) -> u64 {
    (0..t).filter(|_| rng.gen::<f64>() < p).count() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpmleConfig {
    pub grid_size: usize,
    /// Stop once the mean log-likelihood per coin rises by less than this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for NpmleConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID,
            tolerance: 1e-9,
            max_iters: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NpmleResult {
    /// Mixing distribution on the grid, zero weights pruned.
    pub distribution: DiscreteDistribution,
    /// Weights on the full grid `{0, 1/(G−1), …, 1}`.
    pub grid_weights: Vec<f64>,
    /// `Σ_s n_s log Σ_i w_i Binom(t, s, y_i)` before each update and at the end.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl NpmleResult {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood.last().expect("trace is never empty")
    }
}

/// `ln n!` for `n = 0..=max`.
fn ln_factorials(max: usize) -> Vec<f64> {
    let mut out = vec![0.0; max + 1];
    for i in 1..=max {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

fn ln_binomial(lf: &[f64], n: usize, k: usize) -> f64 {
    lf[n] - lf[k] - lf[n - k]
}

/// `ln Binom(t, s, y)`, with `0 · ln 0 = 0`.
pub fn ln_binomial_pmf(t: usize, s: usize, y: f64) -> f64 {
    let lf = ln_factorials(t);
    ln_binomial_pmf_with(&lf, t, s, y)
}

fn ln_binomial_pmf_with(lf: &[f64], t: usize, s: usize, y: f64) -> f64 {
    let heads = if s == 0 { 0.0 } else { s as f64 * y.ln() };
    let tails = if s == t { 0.0 } else { (t - s) as f64 * (1.0 - y).ln() };
    ln_binomial(lf, t, s) + heads + tails
}

/// Uniform grid `{0, 1/(G−1), …, 1}`.
pub fn unit_grid(g: usize) -> Vec<f64> {
    (0..g).map(|i| i as f64 / (g - 1) as f64).collect()
}

/// Binomial likelihood matrix with each row scaled by its maximum.
struct Likelihood {
    /// `(t+1) × G`, row `s` holds `Binom(t, s, y_i) / e^{offset_s}`.
    scaled: Vec<f64>,
    offsets: Vec<f64>,
    g: usize,
}

impl Likelihood {
    fn new(t: usize, grid: &[f64]) -> Self {
        let lf = ln_factorials(t);
        let g = grid.len();
        let mut scaled = vec![0.0; (t + 1) * g];
        let mut offsets = vec![0.0; t + 1];
        for s in 0..=t {
            let row = &mut scaled[s * g..(s + 1) * g];
            for (r, &y) in row.iter_mut().zip(grid) {
                *r = ln_binomial_pmf_with(&lf, t, s, y);
            }
            let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.iter_mut().for_each(|r| *r = (*r - top).exp());
            offsets[s] = top;
        }
        Self { scaled, offsets, g }
    }

    fn row(&self, s: usize) -> &[f64] {
        &self.scaled[s * self.g..(s + 1) * self.g]
    }
}

fn mixture(lik: &Likelihood, s: usize, w: &[f64]) -> f64 {
    lik.row(s).iter().zip(w).map(|(p, wi)| p * wi).sum()
}

fn total_log_likelihood(lik: &Likelihood, fp: &Fingerprint, w: &[f64]) -> f64 {
    fp.counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(s, &n)| n as f64 * (mixture(lik, s, w).ln() + lik.offsets[s]))
        .sum()
}

/// Log-likelihood of the mixing weights `w` on `grid`.
pub fn log_likelihood(fp: &Fingerprint, grid: &[f64], w: &[f64]) -> Result<f64> {
    if grid.len() != w.len() {
        return Err(Error::Dimension { expected: grid.len(), got: w.len() });
    }
    Ok(total_log_likelihood(&Likelihood::new(fp.t, grid), fp, w))
}

/// Nonparametric maximum likelihood estimate of the mixing distribution by
/// EM on the uniform grid, starting from uniform weights.
pub fn npmle_em(fp: &Fingerprint, cfg: &NpmleConfig) -> Result<NpmleResult> {
    if cfg.grid_size < 2 {
        return Err(Error::invalid("grid size must be at least 2"));
    }
    if !(cfg.tolerance >= 0.0) {
        return Err(Error::invalid("tolerance must be nonnegative"));
    }
    let t = fp.t;
    let grid = unit_grid(cfg.grid_size);
    let lik = Likelihood::new(t, &grid);
    if let Some(s) = fp.degenerate_bin() {
        let y = if t == 0 { 0.0 } else { s as f64 / t as f64 };
        let distribution = DiscreteDistribution::point_mass(&[y])?;
        let mut grid_weights = vec![0.0; cfg.grid_size];
        let nearest = (y * (cfg.grid_size - 1) as f64).round() as usize;
        grid_weights[nearest] = 1.0;
        let lf = ln_factorials(t);
        let ll = fp.coins as f64 * ln_binomial_pmf_with(&lf, t, s, y);
        return Ok(NpmleResult {
            distribution,
            grid_weights,
            log_likelihood: vec![ll],
            iterations: 0,
            converged: true,
        });
    }

    let h = fp.fractions();
    let g = cfg.grid_size;
    let mut w = vec![1.0 / g as f64; g];
    let mut next = vec![0.0; g];
    let mut trace = vec![total_log_likelihood(&lik, fp, &w)];
    let coins = fp.coins as f64;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, &hs) in h.iter().enumerate() {
            if hs == 0.0 {
                continue;
            }
            let row = lik.row(s);
            let c = hs / mixture(&lik, s, &w);
            for (nv, p) in next.iter_mut().zip(row) {
                *nv += c * p;
            }
        }
        for (nv, wi) in next.iter_mut().zip(&w) {
            *nv *= wi;
        }
        let mass: f64 = next.iter().sum();
        debug_assert!((mass - 1.0).abs() <= 1e-12 * g as f64);
        next.iter_mut().for_each(|v| *v /= mass);
        std::mem::swap(&mut w, &mut next);
        iterations += 1;

        let ll = total_log_likelihood(&lik, fp, &w);
        let prev = *trace.last().unwrap();
        if !ll.is_finite() {
            return Err(Error::NonFinite("EM log-likelihood".into()));
        }
        debug_assert!(
            ll >= prev - 1e-9 * prev.abs().max(1.0),
            "EM log-likelihood decreased from {prev} to {ll}"
        );
        trace.push(ll);
        if (ll - prev) / coins < cfg.tolerance {
            converged = true;
            break;
        }
    }
    let distribution = DiscreteDistribution::new(1, grid, w.clone())?.pruned();
    Ok(NpmleResult {
        distribution,
        grid_weights: w,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

/// Exact W1 between distributions on `[0, 1]`.
pub fn w1_unit_interval(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    let to_cheb = |d: &DiscreteDistribution| -> Result<DiscreteDistribution> {
        let support = d.support()?;
        if let Some(&x) = support.iter().find(|&&x| !(-cheb::DOMAIN_SLACK..=1.0 + cheb::DOMAIN_SLACK).contains(&x)) {
            return Err(Error::invalid(format!("support point {x} is outside [0, 1]")));
        }
        DiscreteDistribution::new(
            1,
            support.iter().map(|&x| (2.0 * x - 1.0).clamp(-1.0, 1.0)).collect(),
            d.weights().to_vec(),
        )
    };
    Ok(0.5 * dist::w1_distance(&to_cheb(p)?, &to_cheb(q)?)?)
}

/// `T̃_m(x) = T_m(2x − 1)` on `[0, 1]`.
pub fn shifted_cheb(m: usize, x: f64) -> Result<f64> {
    cheb::eval_t(m, 2.0 * x - 1.0)
}

/// Chebyshev coefficients of `f` on `[0, 1]` in the shifted basis, from
/// interpolation at the shifted Chebyshev nodes.
pub fn shifted_cheb_coeffs<F: Fn(f64) -> f64>(f: F, degree: usize) -> Result<ChebCoefficients> {
    cheb::cheb_interpolation_coeffs(|u| f(0.5 * (u + 1.0)), degree)
}

/// `B_j^t(x) = C(t, j) x^j (1 − x)^{t−j}`.
pub fn bernstein(t: usize, j: usize, x: f64) -> Result<f64> {
    if j > t {
        return Err(Error::invalid(format!("Bernstein index {j} exceeds degree {t}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("{x} is outside [0, 1]")));
    }
    if (x == 0.0 && j > 0) || (x == 1.0 && j < t) {
        return Ok(0.0);
    }
    Ok(ln_binomial_pmf(t, j, x).exp())
}

/// Coefficients of `T̃_m` in the degree-`t` Bernstein basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinConversion {
    pub t: usize,
    pub m: usize,
    /// `C(t, m, j)` for `j = 0..=t`.
    pub coeffs: Vec<f64>,
}

impl BernsteinConversion {
    /// `(t + 1) e^{m²/t}`.
    pub fn bound(&self) -> f64 {
        coefficient_bound(self.t, self.m)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// `Σ_j C(t, m, j) B_j^t(x)` by de Casteljau's algorithm.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid(format!("{x} is outside [0, 1]")));
        }
        let mut b = self.coeffs.clone();
        for level in (1..b.len()).rev() {
            for i in 0..level {
                b[i] = (1.0 - x) * b[i] + x * b[i + 1];
            }
        }
        Ok(b[0])
    }
}

pub fn coefficient_bound(t: usize, m: usize) -> f64 {
    (t as f64 + 1.0) * ((m * m) as f64 / t as f64).exp()
}

/// Writes `T̃_m` in the Bernstein basis of degree `t ≥ m` through degree
/// elevation of its degree-`m` Bernstein form:
/// `C(t, m, j) = Σ_i (−1)^{m−i} C(2m, 2i) C(t−m, j−i) / C(t, j)`.
///
/// The alternating sum is accumulated in exact integers while they fit in
/// 128 bits, and from binomial ratios evaluated in log space beyond that.
pub fn cheb_to_bernstein(t: usize, m: usize) -> Result<BernsteinConversion> {
    if t == 0 {
        return Err(Error::invalid("Bernstein degree must be positive"));
    }
    if m > t {
        return Err(Error::invalid(format!(
            "Chebyshev degree {m} exceeds Bernstein degree {t}"
        )));
    }
    let coeffs = exact_conversion(t, m).unwrap_or_else(|| log_space_conversion(t, m));
    Ok(BernsteinConversion { t, m, coeffs })
}

fn log_space_conversion(t: usize, m: usize) -> Vec<f64> {
    let lf = ln_factorials(2 * t);
    (0..=t)
        .map(|j| {
            let lo = j.saturating_sub(t - m);
            (lo..=j.min(m))
                .map(|i| {
                    let sign = if (m - i) % 2 == 0 { 1.0 } else { -1.0 };
                    let ln = ln_binomial(&lf, 2 * m, 2 * i) + ln_binomial(&lf, t - m, j - i)
                        - ln_binomial(&lf, t, j);
                    sign * ln.exp()
                })
                .sum()
        })
        .collect()
}

/// Pascal rows `C(n, ·)` for `n = 0..=max`, `None` on overflow.
fn binomial_table(max: usize) -> Option<Vec<Vec<i128>>> {
    let mut rows: Vec<Vec<i128>> = vec![vec![1]];
    for n in 1..=max {
        let prev = &rows[n - 1];
        let mut row = vec![1i128; n + 1];
        for k in 1..n {
            row[k] = prev[k - 1].checked_add(prev[k])?;
        }
        rows.push(row);
    }
    Some(rows)
}

fn exact_conversion(t: usize, m: usize) -> Option<Vec<f64>> {
    let c = binomial_table(2 * t.max(m))?;
    (0..=t)
        .map(|j| {
            let lo = j.saturating_sub(t - m);
            let mut num: i128 = 0;
            for i in lo..=j.min(m) {
                let term = c[2 * m][2 * i].checked_mul(c[t - m][j - i])?;
                num = if (m - i) % 2 == 0 { num.checked_add(term)? } else { num.checked_sub(term)? };
            }
            let den = c[t][j];
            let q = num / den;
            let r = num % den;
            Some(q as f64 + r as f64 / den as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    #[test]
    fn fingerprint_counts() {
        let fp = fingerprint(&[0, 2, 2], 2).unwrap();
        assert_eq!(fp.counts(), &[1, 0, 2]);
        let h = fp.fractions();
        assert!((h[0] - 1.0 / 3.0).abs() < 1e-15 && h[1] == 0.0 && (h[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(fingerprint(&[0; 5], 4).unwrap().fractions(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(fingerprint(&[3], 2).is_err());
    }

    #[test]
    fn naive_examples() {
        let d = naive_estimator(&[0, 6], 6).unwrap();
        assert_eq!(d.points(), &[0.0, 1.0]);
        let d = naive_estimator(&[3, 3, 3], 6).unwrap();
        assert!(d.points().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn all_heads_is_point_mass_at_one() {
        let fp = fingerprint(&[1; 10], 1).unwrap();
        let r = npmle_em(&fp, &NpmleConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.distribution.points(), &[1.0]);
    }

    #[test]
    fn em_is_monotone() {
        let mut rng = sampling::rng_from_seed(5);
        let obs: Vec<u64> = (0..2000)
            .map(|i| toss(&mut rng, 10, if i % 3 == 0 { 0.2 } else { 0.7 }))
            .collect();
        let fp = fingerprint(&obs, 10).unwrap();
        let r = npmle_em(&fp, &NpmleConfig { grid_size: 200, ..Default::default() }).unwrap();
        assert!(r.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
        assert!((r.grid_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conversion_small_case() {
        let c = cheb_to_bernstein(1, 1).unwrap();
        assert_eq!(c.coeffs, vec![-1.0, 1.0]);
        let c = cheb_to_bernstein(5, 0).unwrap();
        assert!(c.coeffs.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(cheb_to_bernstein(3, 4).is_err());
    }

    #[test]
    fn log_space_path_agrees_with_exact() {
        for (t, m) in [(6, 3), (15, 9), (25, 12)] {
            let exact = exact_conversion(t, m).unwrap();
            let approx = log_space_conversion(t, m);
            let scale = exact.iter().fold(1.0f64, |a, c| a.max(c.abs()));
            for (a, b) in exact.iter().zip(&approx) {
                assert!((a - b).abs() < 1e-10 * scale);
            }
        }
        // 128-bit numerators run out near t = 60
        assert!(exact_conversion(200, 150).is_none());
        let far = cheb_to_bernstein(200, 5).unwrap();
        assert!((far.eval(0.3).unwrap() - shifted_cheb(5, 0.3).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn conversion_reproduces_shifted_chebyshev() {
        for t in [4, 13, 30] {
            for m in 0..t {
                let c = cheb_to_bernstein(t, m).unwrap();
                for i in 0..=20 {
                    let x = i as f64 / 20.0;
                    assert!((c.eval(x).unwrap() - shifted_cheb(m, x).unwrap()).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn unit_w1_examples() {
        let a = DiscreteDistribution::point_mass(&[0.0]).unwrap();
        let b = DiscreteDistribution::point_mass(&[1.0]).unwrap();
        assert!((w1_unit_interval(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let neg = DiscreteDistribution::point_mass(&[-0.5]).unwrap();
        assert!(w1_unit_interval(&a, &neg).is_err());
    }
}
