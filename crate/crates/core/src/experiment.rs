//! Synthetic workloads for the private-synthesis scaling study.
//!
//! Each generator is a density on `[-1, 1]`, sampled by inverting its CDF
//! tabulated on a 10⁴-point grid with linear interpolation between grid
//! points.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{self, DiscreteDistribution};
use crate::dp::{self, DpConfig, PrivacyBudget};
use crate::error::{Error, Result};
use crate::sampling::{self, SeededRng};

/// Points in the tabulated CDF.
pub const CDF_GRID: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// `e^{-x²/2}`
    Gaussian,
    /// `sin(πx) + 1`
    Sine,
    /// `(x + 1.1)^{-2}`
    PowerLaw,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::Gaussian, Generator::Sine, Generator::PowerLaw];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::Sine => "sine",
            Generator::PowerLaw => "powerlaw",
        }
    }

    /// Unnormalized density.
    pub fn density(self, x: f64) -> f64 {
        match self {
            Generator::Gaussian => (-0.5 * x * x).exp(),
            Generator::Sine => (std::f64::consts::PI * x).sin() + 1.0,
            Generator::PowerLaw => (x + 1.1).powi(-2),
        }
    }

    pub fn sampler(self) -> InverseCdfSampler {
        InverseCdfSampler::new(|x| self.density(x))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Generator::Gaussian),
            "sine" => Ok(Generator::Sine),
            "powerlaw" | "power-law" => Ok(Generator::PowerLaw),
            other => Err(Error::invalid(format!(
                "unknown generator {other:?} (expected gaussian, sine or powerlaw)"
            ))),
        }
    }
}

/// Tabulated inverse-CDF sampler on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct InverseCdfSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfSampler {
    pub fn new(density: impl Fn(f64) -> f64) -> Self {
        let xs: Vec<f64> = (0..CDF_GRID)
            .map(|i| -1.0 + 2.0 * i as f64 / (CDF_GRID - 1) as f64)
            .collect();
        let f: Vec<f64> = xs.iter().map(|&x| density(x).max(0.0)).collect();
        let mut cdf = vec![0.0; CDF_GRID];
        for i in 1..CDF_GRID {
            cdf[i] = cdf[i - 1] + 0.5 * (f[i] + f[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = cdf[CDF_GRID - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { xs, cdf }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, CDF_GRID - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        (self.xs[i - 1] + t.clamp(0.0, 1.0) * (self.xs[i] - self.xs[i - 1])).clamp(-1.0, 1.0)
    }

    pub fn sample(&self, rng: &mut SeededRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.quantile(sampling::open_uniform(rng))).collect()
    }
}

/// One row of the scaling study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub generator: Generator,
    pub n: usize,
    pub trial: usize,
    pub w1: f64,
    pub expected_bound: f64,
    pub converged: bool,
}

/// Data and noise seeds for `(n, trial)` under a base seed.
pub fn trial_seeds(base: u64, generator: Generator, n: usize, trial: usize) -> (u64, u64) {
    let label = ((generator as u64) << 56) ^ ((n as u64) << 20) ^ trial as u64;
    let s = sampling::derive_seed(base, label);
    (sampling::derive_seed(s, 1), sampling::derive_seed(s, 2))
}

/// Samples `n` points, synthesizes with `δ = 1/n²` unless `delta` is given,
/// and measures W1 against the sample.
pub fn run_dp_trial(
    generator: Generator,
    sampler: &InverseCdfSampler,
    n: usize,
    trial: usize,
    epsilon: f64,
    delta: Option<f64>,
    base_seed: u64,
) -> Result<TrialRecord> {
    let delta = delta.unwrap_or(1.0 / (n as f64 * n as f64));
    let budget = PrivacyBudget::new(epsilon, delta)?;
    let (data_seed, noise_seed) = trial_seeds(base_seed, generator, n, trial);
    let mut rng = sampling::rng_from_seed(data_seed);
    let data = sampler.sample(&mut rng, n);
    let out = dp::dp_synthesize(&data, &DpConfig::new(budget), noise_seed)?;
    let p = DiscreteDistribution::uniform(1, data)?;
    Ok(TrialRecord {
        generator,
        n,
        trial,
        w1: dist::w1_distance(&p, &out.distribution)?,
        expected_bound: dp::expected_error_curve(n, epsilon, delta),
        converged: out.report.converged,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_are_monotone_and_in_range() {
        for g in Generator::ALL {
            let s = g.sampler();
            let mut last = -1.0;
            for i in 1..100 {
                let q = s.quantile(i as f64 / 100.0);
                assert!(q >= last && (-1.0..=1.0).contains(&q));
                last = q;
            }
        }
        let s = Generator::Sine.sampler();
        // density vanishes at x = -1/2, symmetric mass around 1/2
        assert!((s.quantile(0.5) - 0.5).abs() > 0.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("Gaussian".parse::<Generator>().unwrap(), Generator::Gaussian);
        assert_eq!("powerlaw".parse::<Generator>().unwrap(), Generator::PowerLaw);
        assert!("cauchy".parse::<Generator>().is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 3.0 / i as f64)).collect();
        assert!((log_log_slope(&pts) + 1.0).abs() < 1e-12);
    }
}
