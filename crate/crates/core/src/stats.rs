//! Goodness-of-fit tests, moments and uniform-consumption metering.

use std::fmt;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bitstream::UniformSource;
use crate::error::{Error, Result};
use crate::samplers::{Sampler, SamplerConfig};

/// Smallest sample count accepted by [`measure_consumption`].
pub const MIN_CONSUMPTION_SAMPLES: usize = 100_000;

/// Expected count below which chi-square bins are merged.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub test_name: String,
    pub statistic: f64,
    pub critical_value: f64,
    pub n: usize,
    pub passed: bool,
}

impl TestReport {
    fn new(test_name: &str, statistic: f64, critical_value: f64, n: usize) -> Self {
        Self { test_name: test_name.to_string(), statistic, critical_value, n, passed: statistic < critical_value }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.test_name = name.into();
        self
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.6e} {:.6e} {}",
            self.test_name,
            self.statistic,
            self.critical_value,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Alpha(alpha));
    }
    Ok(())
}

/// `c(alpha) = sqrt(-ln(alpha / 2) / 2)`; `c(0.01) = 1.6276`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt()
}

fn check_sorted(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptySamples);
    }
    // NaN compares as out of order.
    match xs.windows(2).position(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt())) {
        Some(i) => Err(Error::UnsortedSamples(i + 1)),
        None => Ok(()),
    }
}

/// Sorts with NaN last.
pub fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs
}

/// One-sample Kolmogorov-Smirnov test against `cdf` on ascending `samples`,
/// with the asymptotic critical value `c(alpha) / sqrt(n)`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_sorted(samples)?;
    let n = samples.len() as f64;
    let d = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(TestReport::new("ks", d, ks_coefficient(alpha) / n.sqrt(), samples.len()))
}

/// Two-sample Kolmogorov-Smirnov test on ascending inputs.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_sorted(a)?;
    check_sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let critical = ks_coefficient(alpha) * ((na + nb) / (na * nb)).sqrt();
    Ok(TestReport::new("ks2", d, critical, a.len() + b.len()))
}

/// Upper `alpha` quantile of chi-square with `df` degrees of freedom.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    ChiSquared::new(df as f64).expect("df > 0").inverse_cdf(1.0 - alpha)
}

/// Pearson chi-square test of `observed` counts against `expected`
/// probabilities, which must sum to 1. Bins whose expected count is below
/// [`MIN_EXPECTED_COUNT`] are merged rightward into the next bin; a short
/// remainder at the right end joins the last full bin.
pub fn chi_square_test(observed: &[u64], expected: &[f64], alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    if observed.len() != expected.len() {
        return Err(Error::BinMismatch { observed: observed.len(), expected: expected.len() });
    }
    let total_p: f64 = expected.iter().sum();
    if (total_p - 1.0).abs() > 1e-9 {
        return Err(Error::ProbabilitySum(total_p));
    }
    let n: u64 = observed.iter().sum();
    let nf = n as f64;

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        obs += o as f64;
        exp += p * nf;
        if exp >= MIN_EXPECTED_COUNT {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => bins.push((obs, exp)),
        }
    }
    if bins.len() < 2 {
        return Err(Error::TooFewBins);
    }
    let stat = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    Ok(TestReport::new("chi2", stat, chi_square_critical(bins.len() - 1, alpha), n as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Skewness and kurtosis are the moment ratios `m3 / m2^1.5` and
/// `m4 / m2^2 - 3`, reported as 0 for a constant sequence.
pub fn moments(samples: &[f64]) -> Result<Moments> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (n - 1.0);
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    Ok(Moments { mean, variance, skewness, excess_kurtosis })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsumptionReport {
    pub sampler_kind: String,
    pub samples: u64,
    pub uniforms: u64,
    pub mean_per_sample: f64,
    pub ci95_halfwidth: f64,
}

impl ConsumptionReport {
    /// `sampler,n,mean,ci95`.
    pub fn csv_row(&self) -> String {
        format!("{},{},{:.6},{:.6}", self.sampler_kind, self.samples, self.mean_per_sample, self.ci95_halfwidth)
    }
}

/// Generates `n` samples on a fresh source seeded with `seed` and reports
/// fresh uniforms per sample. The half-width is `1.96 sd / sqrt(n)` over
/// per-sample costs.
pub fn measure_consumption(config: &SamplerConfig, n: usize, seed: u64) -> Result<ConsumptionReport> {
    if n < MIN_CONSUMPTION_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_CONSUMPTION_SAMPLES, got: n });
    }
    let mut sampler = Sampler::new(config.clone(), UniformSource::new(seed))?;
    meter(&mut sampler, n)
}

/// Meters `n` further samples from an existing sampler. Setup cost (for
/// instance a Wallace pool fill) already on the source is excluded.
pub fn meter(sampler: &mut Sampler, n: usize) -> Result<ConsumptionReport> {
    let start = sampler.source().draws();
    let (mut mean, mut m2) = (0.0, 0.0);
    let mut last = start;
    for i in 0..n {
        sampler.next_sample()?;
        let now = sampler.source().draws();
        let cost = (now - last) as f64;
        last = now;
        let delta = cost - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (cost - mean);
    }
    let uniforms = last - start;
    let sd = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(ConsumptionReport {
        sampler_kind: sampler.kind().name().to_string(),
        samples: n as u64,
        uniforms,
        mean_per_sample: uniforms as f64 / n as f64,
        ci95_halfwidth: 1.96 * sd / (n as f64).sqrt(),
    })
}
