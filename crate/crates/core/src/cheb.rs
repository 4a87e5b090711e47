//! Chebyshev polynomials, Chebyshev nodes and Jackson damping.
//!
//! Two coefficient conventions are in use throughout the crate. In the
//! *plain* convention a series is written in the `T_j` basis. In the
//! *normalized* convention it is written in the orthonormal basis
//! `T̄_j = T_j / sqrt(<T_j w, T_j>)` where `w(x) = 1 / sqrt(1 - x^2)`, so
//! `T̄_0 = T_0 / sqrt(π)` and `T̄_j = T_j / sqrt(π/2)` for `j >= 1`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs this far outside `[-1, 1]` are clamped instead of rejected.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Basis convention of a coefficient or moment vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// The `T_j` basis.
    Plain,
    /// The orthonormal `T̄_j` basis.
    Normalized,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Convention::Plain => "plain",
            Convention::Normalized => "normalized",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `sqrt(<T_j w, T_j>)`: `sqrt(π)` for `j = 0`, `sqrt(π/2)` otherwise.
#[inline]
pub fn norm_factor(j: usize) -> f64 {
    if j == 0 {
        PI.sqrt()
    } else {
        (PI / 2.0).sqrt()
    }
}

pub(crate) fn check_domain(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_SLACK {
        return Err(Error::Domain { value: x });
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// `T_j(x)` by the three-term recurrence.
pub fn eval_t(j: usize, x: f64) -> Result<f64> {
    let x = check_domain(x)?;
    Ok(eval_t_unchecked(j, x))
}

#[inline]
pub(crate) fn eval_t_unchecked(j: usize, x: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..j {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `U_j(x)`, the Chebyshev polynomial of the second kind.
pub fn eval_u(j: usize, x: f64) -> Result<f64> {
    let x = check_domain(x)?;
    Ok(match j {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let (mut prev, mut cur) = (1.0, 2.0 * x);
            for _ in 1..j {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    })
}

/// Fills `out[j] = T_j(x)` for `j = 0..out.len()`.
pub(crate) fn fill_t(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for j in 2..out.len() {
        out[j] = 2.0 * x * out[j - 1] - out[j - 2];
    }
}

/// The `g` Chebyshev nodes of the first kind, `cos((2i - 1) π / (2g))` for
/// `i = 1..=g`, in decreasing order.
pub fn chebyshev_nodes(g: usize) -> Result<Vec<f64>> {
    if g == 0 {
        return Err(Error::invalid("node count must be positive"));
    }
    let gf = g as f64;
    let mut nodes = vec![0.0; g];
    // fill the positive half and mirror it so the grid is exactly symmetric
    for i in 0..g / 2 {
        let x = ((2 * i + 1) as f64 * PI / (2.0 * gf)).cos();
        nodes[i] = x;
        nodes[g - 1 - i] = -x;
    }
    Ok(nodes)
}

/// Fourier coefficients `b̂(0..=2m-2)` of the Jackson kernel
/// `(sin(m x / 2) / sin(x / 2))^4`, as exact integers.
pub fn jackson_kernel_coeffs(m: usize) -> Result<Vec<u64>> {
    if m == 0 {
        return Err(Error::invalid("kernel half-degree must be positive"));
    }
    let mi = m as i64;
    let coeffs = (0..=2 * mi - 2)
        .map(|k| {
            (-mi..=mi - k)
                .map(|t| ((mi - t.abs()) * (mi - (t + k).abs())) as u64)
                .sum()
        })
        .collect();
    Ok(coeffs)
}

/// Damping factors for a degree-`k` damped Chebyshev series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacksonDamping {
    /// Kernel half-degree.
    pub m: usize,
    /// `b̂(0..=2m-2)`.
    pub kernel_coeffs: Vec<u64>,
    /// `b^0..=b^k`, i.e. `b̂(j) / b̂(0)` truncated to the series degree.
    pub damping: Vec<f64>,
}

impl JacksonDamping {
    pub fn degree(&self) -> usize {
        self.damping.len() - 1
    }
}

/// Smallest kernel half-degree whose kernel reaches degree `k`.
pub fn jackson_half_degree(k: usize) -> usize {
    k.div_ceil(2) + 1
}

/// Jackson damping factors `b^0..=b^k` for a degree-`k` series.
pub fn jackson_damping(k: usize) -> Result<JacksonDamping> {
    if k == 0 {
        return Err(Error::invalid("series degree must be positive"));
    }
    let m = jackson_half_degree(k);
    let kernel_coeffs = jackson_kernel_coeffs(m)?;
    let b0 = kernel_coeffs[0] as f64;
    let damping = kernel_coeffs[..=k].iter().map(|&b| b as f64 / b0).collect();
    Ok(JacksonDamping {
        m,
        kernel_coeffs,
        damping,
    })
}

/// Chebyshev series coefficients `c_0..=c_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebCoefficients {
    pub values: Vec<f64>,
    pub convention: Convention,
}

impl ChebCoefficients {
    pub fn new(values: Vec<f64>, convention: Convention) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient {v}")));
        }
        Ok(Self { values, convention })
    }

    pub fn degree(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// Re-expresses the series in another basis.
    pub fn to_convention(&self, convention: Convention) -> Self {
        let values = match (self.convention, convention) {
            (a, b) if a == b => self.values.clone(),
            // f = Σ c_j T_j = Σ (c_j norm_j) T̄_j
            (Convention::Plain, Convention::Normalized) => self
                .values
                .iter()
                .enumerate()
                .map(|(j, c)| c * norm_factor(j))
                .collect(),
            _ => self
                .values
                .iter()
                .enumerate()
                .map(|(j, c)| c / norm_factor(j))
                .collect(),
        };
        Self { values, convention }
    }

    /// Evaluates the series at `x` with Clenshaw's recurrence.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let x = check_domain(x)?;
        let plain = self.to_convention(Convention::Plain);
        Ok(clenshaw(&plain.values, x))
    }

    /// Multiplies coefficient `j` by `b^j` and drops terms past the damping
    /// degree.
    pub fn damped(&self, damping: &JacksonDamping) -> Self {
        let values = self
            .values
            .iter()
            .zip(&damping.damping)
            .map(|(c, b)| c * b)
            .collect();
        Self {
            values,
            convention: self.convention,
        }
    }
}

/// `Σ c_j T_j(x)` for plain coefficients.
pub(crate) fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cj in c.iter().skip(1).rev() {
        let b0 = cj + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match c.first() {
        Some(&c0) => c0 + x * b1 - b2,
        None => 0.0,
    }
}

/// Coefficients of the degree-`degree` interpolant of `f` at the
/// `degree + 1` Chebyshev nodes, computed by the discrete cosine sum.
pub fn cheb_interpolation_coeffs<F>(f: F, degree: usize) -> Result<ChebCoefficients>
where
    F: Fn(f64) -> f64,
{
    if degree == 0 {
        return Err(Error::invalid("interpolation degree must be positive"));
    }
    let n = degree + 1;
    let nf = n as f64;
    let angles: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * PI / nf).collect();
    let values: Vec<f64> = chebyshev_nodes(n)?.into_iter().map(f).collect();
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("function value {v}")));
    }
    let mut coeffs: Vec<f64> = (0..n)
        .map(|j| {
            let s: f64 = angles
                .iter()
                .zip(&values)
                .map(|(a, v)| v * (j as f64 * a).cos())
                .sum();
            2.0 * s / nf
        })
        .collect();
    coeffs[0] /= 2.0;
    ChebCoefficients::new(coeffs, Convention::Plain)
}

/// `Σ_{j >= 1} (j c_j)^2` for normalized coefficients.
pub fn decay_functional(c: &ChebCoefficients) -> Result<f64> {
    if c.convention != Convention::Normalized {
        return Err(Error::Convention {
            expected: Convention::Normalized.name(),
            got: c.convention.name(),
        });
    }
    Ok(c
        .values
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, cj)| (j as f64 * cj).powi(2))
        .sum())
}

/// A multi-index `K = (k_1, .., k_d)` with `d` in `{1, 2, 3}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(k: Vec<usize>) -> Result<Self> {
        if !(1..=3).contains(&k.len()) {
            return Err(Error::invalid(format!(
                "multi-index dimension {} not in 1..=3",
                k.len()
            )));
        }
        Ok(Self(k))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    /// `‖K‖_2^2`, exact.
    pub fn norm2_sq(&self) -> u64 {
        self.0.iter().map(|&k| (k * k) as u64).sum()
    }

    pub fn norm2(&self) -> f64 {
        (self.norm2_sq() as f64).sqrt()
    }

    /// Number of nonzero components.
    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|&&k| k != 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// `sqrt(2^nnz(K) / π^d)`, the factor taking `T_K` to `T̄_K`.
    pub fn normalization(&self) -> f64 {
        self.0.iter().map(|&k| 1.0 / norm_factor(k)).product()
    }

    /// All indices in `{0..=m}^d` except the zero index, in row-major order.
    pub fn enumerate_box(d: usize, m: usize) -> Result<Vec<MultiIndex>> {
        if !(1..=3).contains(&d) {
            return Err(Error::invalid(format!("dimension {d} not in 1..=3")));
        }
        let side = m + 1;
        let total = side.pow(d as u32);
        Ok((1..total)
            .map(|flat| {
                let mut rem = flat;
                let mut k = vec![0; d];
                for slot in k.iter_mut().rev() {
                    *slot = rem % side;
                    rem /= side;
                }
                MultiIndex(k)
            })
            .collect())
    }
}

/// `T_K(x) = Π T_{k_i}(x_i)`.
pub fn eval_t_multi(k: &MultiIndex, x: &[f64]) -> Result<f64> {
    if k.dim() != x.len() {
        return Err(Error::Dimension {
            expected: k.dim(),
            got: x.len(),
        });
    }
    k.0.iter()
        .zip(x)
        .map(|(&ki, &xi)| eval_t(ki, xi))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_t_examples() {
        assert_eq!(eval_t(0, 0.3).unwrap(), 1.0);
        assert_eq!(eval_t(2, 0.5).unwrap(), -0.5);
        let x = (PI / 4.0).cos();
        let expected = (5.0 * PI / 4.0).cos();
        assert!((eval_t(5, x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn eval_u_examples() {
        assert_eq!(eval_u(0, 0.9).unwrap(), 1.0);
        assert_eq!(eval_u(1, 0.25).unwrap(), 0.5);
        assert!(eval_u(2, 0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn domain_clamps_and_rejects() {
        assert_eq!(eval_t(3, 1.0 + 5e-13).unwrap(), 1.0);
        assert!(matches!(eval_t(3, 1.0 + 1e-9), Err(Error::Domain { .. })));
        assert!(eval_u(1, -1.5).is_err());
        assert!(eval_t(1, f64::NAN).is_err());
    }

    #[test]
    fn nodes() {
        assert_eq!(chebyshev_nodes(1).unwrap(), vec![0.0]);
        let two = chebyshev_nodes(2).unwrap();
        assert!((two[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((two[1] + 0.5f64.sqrt()).abs() < 1e-15);
        let four = chebyshev_nodes(4).unwrap();
        for (i, x) in four.iter().enumerate() {
            let want = ((2 * i + 1) as f64 * PI / 8.0).cos();
            assert!((x - want).abs() < 1e-15);
        }
        assert!(four.windows(2).all(|w| w[0] > w[1]));
        assert!(chebyshev_nodes(0).is_err());
    }

    #[test]
    fn kernel_coefficients() {
        assert_eq!(jackson_kernel_coeffs(1).unwrap(), vec![1]);
        assert_eq!(jackson_kernel_coeffs(2).unwrap(), vec![6, 4, 1]);
        // brute force: b̂(k) = Σ_s a(s) a(s + k) with a(s) = m - |s|, |s| < m
        let m = 3i64;
        let a = |s: i64| if s.abs() < m { m - s.abs() } else { 0 };
        let brute: Vec<u64> = (0..=2 * m - 2)
            .map(|k| (-2 * m..=2 * m).map(|s| (a(s) * a(s + k)) as u64).sum())
            .collect();
        let got = jackson_kernel_coeffs(3).unwrap();
        assert_eq!(got, brute);
        assert_eq!(got.len(), 5);
        assert!(got.windows(2).all(|w| w[0] >= w[1]) && got[4] > 0);
    }

    #[test]
    fn damping_examples() {
        let d1 = jackson_damping(1).unwrap();
        assert_eq!(d1.m, 2);
        assert_eq!(d1.damping, vec![1.0, 4.0 / 6.0]);
        let d2 = jackson_damping(2).unwrap();
        assert_eq!(d2.damping, vec![1.0, 4.0 / 6.0, 1.0 / 6.0]);
        for k in 1..40 {
            let d = jackson_damping(k).unwrap();
            assert_eq!(d.damping[0], 1.0);
            assert_eq!(d.degree(), k);
            assert!(2 * d.m - 2 >= k);
            assert!(d.damping.iter().all(|&b| b > 0.0));
        }
    }

    #[test]
    fn interpolation_of_basis_polynomials() {
        let one = cheb_interpolation_coeffs(|_| 1.0, 4).unwrap();
        let x = cheb_interpolation_coeffs(|x| x, 4).unwrap();
        let t2 = cheb_interpolation_coeffs(|x| 2.0 * x * x - 1.0, 4).unwrap();
        for (c, hot) in [(one, 0), (x, 1), (t2, 2)] {
            assert_eq!(c.convention, Convention::Plain);
            for (j, v) in c.values.iter().enumerate() {
                let want = if j == hot { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-14, "j={j} v={v}");
            }
        }
        assert!(cheb_interpolation_coeffs(|x| 1.0 / x, 2).is_err());
    }

    #[test]
    fn decay_functional_cases() {
        let x = cheb_interpolation_coeffs(|x| x, 8).unwrap();
        let norm = x.to_convention(Convention::Normalized);
        assert!((norm.values[1] - (PI / 2.0).sqrt()).abs() < 1e-14);
        assert!((decay_functional(&norm).unwrap() - PI / 2.0).abs() < 1e-12);
        let c = cheb_interpolation_coeffs(|_| 0.7, 8)
            .unwrap()
            .to_convention(Convention::Normalized);
        assert!(decay_functional(&c).unwrap() < 1e-28);
        assert!(matches!(
            decay_functional(&x),
            Err(Error::Convention { .. })
        ));
    }

    #[test]
    fn decay_of_kinked_function() {
        let c = cheb_interpolation_coeffs(|x| (x - 0.3).abs(), 200)
            .unwrap()
            .to_convention(Convention::Normalized);
        assert!(decay_functional(&c).unwrap() <= PI / 2.0 + 1e-3);
    }

    #[test]
    fn convention_round_trip() {
        let c = ChebCoefficients::new(vec![0.3, -1.2, 0.5], Convention::Plain).unwrap();
        let back = c
            .to_convention(Convention::Normalized)
            .to_convention(Convention::Plain);
        for (a, b) in c.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((c.eval(0.4).unwrap() - (0.3 - 1.2 * 0.4 + 0.5 * (2.0 * 0.16 - 1.0))).abs() < 1e-15);
    }

    #[test]
    fn multi_index_eval() {
        let k00 = MultiIndex::new(vec![0, 0]).unwrap();
        assert_eq!(eval_t_multi(&k00, &[0.2, 0.9]).unwrap(), 1.0);
        let k11 = MultiIndex::new(vec![1, 1]).unwrap();
        assert_eq!(eval_t_multi(&k11, &[0.5, 0.5]).unwrap(), 0.25);
        let k21 = MultiIndex::new(vec![2, 1]).unwrap();
        assert_eq!(eval_t_multi(&k21, &[0.5, -0.5]).unwrap(), 0.25);
        assert!(matches!(
            eval_t_multi(&k21, &[0.5]),
            Err(Error::Dimension { .. })
        ));
        assert!(MultiIndex::new(vec![]).is_err());
        assert!(MultiIndex::new(vec![1; 4]).is_err());
    }

    #[test]
    fn box_enumeration() {
        let ks = MultiIndex::enumerate_box(2, 2).unwrap();
        assert_eq!(ks.len(), 8);
        assert!(ks.iter().all(|k| !k.is_zero()));
        let k = MultiIndex::new(vec![3, 4]).unwrap();
        assert_eq!(k.norm2_sq(), 25);
        assert_eq!(k.norm2(), 5.0);
        assert_eq!(MultiIndex::new(vec![0, 2, 0]).unwrap().nnz(), 1);
    }
}
