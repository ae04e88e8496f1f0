//! Exponential and normal generators.
//!
//! The comparison-method samplers pick an interval `I_k`, draw a candidate
//! uniformly on it and accept through [`run_test`] on the shifted exponent,
//! redrawing on the same interval after a rejection. The von Neumann
//! exponential is the exception: a rejection moves the candidate one unit
//! to the right, which selects the interval and runs the trials in one loop.
//! Log, Box-Muller and polar baselines are here for cross-checks and timing.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::bitstream::{UniformSource, DEFAULT_WORD_BITS};
use crate::comparison::run_test;
use crate::error::{Error, Result};
use crate::special::standard_normal_cdf;
use crate::tables::{IntervalTable, Scheme, MAX_TABLE_LEN};
use crate::wallace::{NormalPool, DEFAULT_POOL_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    ExpVn,
    ExpBrent,
    ExpLog,
    NormalForsythe,
    NormalGrand,
    NormalBoxMuller,
    NormalPolar,
    NormalWallace,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 8] = [
        SamplerKind::ExpVn,
        SamplerKind::ExpBrent,
        SamplerKind::ExpLog,
        SamplerKind::NormalForsythe,
        SamplerKind::NormalGrand,
        SamplerKind::NormalBoxMuller,
        SamplerKind::NormalPolar,
        SamplerKind::NormalWallace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::ExpVn => "exp_vn",
            SamplerKind::ExpBrent => "exp_brent",
            SamplerKind::ExpLog => "exp_log",
            SamplerKind::NormalForsythe => "normal_forsythe",
            SamplerKind::NormalGrand => "grand",
            SamplerKind::NormalBoxMuller => "box_muller",
            SamplerKind::NormalPolar => "polar",
            SamplerKind::NormalWallace => "wallace",
        }
    }

    /// Accepts the short names plus `normal_`-prefixed spellings.
    pub fn from_name(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        let short = match lower.as_str() {
            "normal_grand" => "grand",
            "normal_box_muller" => "box_muller",
            "normal_polar" => "polar",
            "normal_wallace" => "wallace",
            "exp_log_baseline" => "exp_log",
            other => other,
        };
        Self::ALL.into_iter().find(|k| k.name() == short)
    }

    /// Interval scheme, for the comparison-method samplers.
    pub fn scheme(self) -> Option<Scheme> {
        match self {
            SamplerKind::ExpVn => Some(Scheme::ExpVonNeumann),
            SamplerKind::ExpBrent => Some(Scheme::ExpBrent),
            SamplerKind::NormalForsythe => Some(Scheme::NormalForsythe),
            SamplerKind::NormalGrand => Some(Scheme::NormalBrent),
            _ => None,
        }
    }

    pub fn is_normal(self) -> bool {
        !matches!(self, SamplerKind::ExpVn | SamplerKind::ExpBrent | SamplerKind::ExpLog)
    }

    /// Distribution function of the target, `Exp(1)` or `N(0, 1)`.
    pub fn target_cdf(self) -> fn(f64) -> f64 {
        if self.is_normal() {
            standard_normal_cdf
        } else {
            exponential_cdf
        }
    }

    /// Recycling is on by default only for `exp_brent`, `grand` and `wallace`.
    pub fn recycles_by_default(self) -> bool {
        matches!(self, SamplerKind::ExpBrent | SamplerKind::NormalGrand | SamplerKind::NormalWallace)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::from_name(s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            format!("unknown sampler {s:?}; expected one of {}", names.join(", "))
        })
    }
}

pub fn exponential_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// Default table length `min(w, 64)`.
pub fn default_table_len(word_bits: u32) -> usize {
    (word_bits as usize).min(MAX_TABLE_LEN)
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Present exactly for the comparison-method samplers.
    pub table: Option<Arc<IntervalTable>>,
    pub recycling_enabled: bool,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Result<Self> {
        Self::with_table_len(kind, default_table_len(DEFAULT_WORD_BITS))
    }

    pub fn with_table_len(kind: SamplerKind, len: usize) -> Result<Self> {
        let table = match kind.scheme() {
            Some(scheme) => Some(Arc::new(IntervalTable::build(scheme, len)?)),
            None => None,
        };
        Ok(Self { kind, table, recycling_enabled: kind.recycles_by_default() })
    }

    pub fn recycling(mut self, enabled: bool) -> Self {
        self.recycling_enabled = enabled;
        self
    }

    pub fn table_len(&self) -> Option<usize> {
        self.table.as_ref().map(|t| t.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    /// Interval index `k` for the comparison-method samplers.
    pub interval: Option<u32>,
}

/// A sampler owning its uniform source.
#[derive(Debug)]
pub struct Sampler {
    config: SamplerConfig,
    src: UniformSource,
    spare: Option<f64>,
    pool: Option<NormalPool>,
}

impl Sampler {
    pub fn new(config: SamplerConfig, mut src: UniformSource) -> Result<Self> {
        if let (Some(scheme), Some(table)) = (config.kind.scheme(), &config.table) {
            if table.scheme() != scheme {
                return Err(Error::SchemeMismatch { expected: scheme, found: table.scheme() });
            }
        }
        if config.kind.scheme().is_some() && config.table.is_none() {
            let config = SamplerConfig::with_table_len(config.kind, default_table_len(src.word_bits()))?
                .recycling(config.recycling_enabled);
            return Self::new(config, src);
        }
        src.set_recycling(config.recycling_enabled);
        let pool = match config.kind {
            SamplerKind::NormalWallace => Some(NormalPool::new(DEFAULT_POOL_SIZE, &mut src)?),
            _ => None,
        };
        Ok(Self { config, src, spare: None, pool })
    }

    pub fn from_seed(kind: SamplerKind, seed: u64) -> Result<Self> {
        Self::new(SamplerConfig::new(kind)?, UniformSource::new(seed))
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn kind(&self) -> SamplerKind {
        self.config.kind
    }

    pub fn source(&self) -> &UniformSource {
        &self.src
    }

    pub fn source_mut(&mut self) -> &mut UniformSource {
        &mut self.src
    }

    pub fn next_sample(&mut self) -> Result<Sample> {
        let src = &mut self.src;
        let table = self.config.table.as_deref();
        let (value, interval) = match self.config.kind {
            SamplerKind::ExpVn => {
                let (x, j) = exp_vn_with_offset(src)?;
                (x, Some(j + 1))
            }
            SamplerKind::ExpBrent => tagged(exp_brent(table.expect("table"), src)?),
            SamplerKind::NormalForsythe => tagged(normal_forsythe(table.expect("table"), src)?),
            SamplerKind::NormalGrand => tagged(normal_grand(table.expect("table"), src)?),
            SamplerKind::ExpLog => (exp_log_baseline(src), None),
            SamplerKind::NormalBoxMuller => (
                self.spare.take().unwrap_or_else(|| {
                    let (a, b) = box_muller(src);
                    self.spare = Some(b);
                    a
                }),
                None,
            ),
            SamplerKind::NormalPolar => (
                self.spare.take().unwrap_or_else(|| {
                    let (a, b) = polar(src);
                    self.spare = Some(b);
                    a
                }),
                None,
            ),
            SamplerKind::NormalWallace => (self.pool.as_mut().expect("pool").next_normal(src)?, None),
        };
        Ok(Sample { value, interval })
    }

    pub fn next_value(&mut self) -> Result<f64> {
        Ok(self.next_sample()?.value)
    }

    pub fn take(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.next_value()).collect()
    }
}

fn tagged((x, k): (f64, usize)) -> (f64, Option<u32>) {
    (x, Some(k as u32))
}

fn expect_scheme(table: &IntervalTable, expected: Scheme) -> Result<()> {
    if table.scheme() != expected {
        return Err(Error::SchemeMismatch { expected, found: table.scheme() });
    }
    Ok(())
}

/// Candidate uniform on `I_k`, accepted by a run test on `G_k`; rejected
/// candidates are redrawn on the same interval.
fn sample_in_interval(table: &IntervalTable, k: usize, src: &mut UniformSource) -> Result<f64> {
    let (lo, hi) = table.interval(k);
    let width = hi - lo;
    loop {
        let offset = width * src.next_uniform();
        if run_test(table.exponent_at_offset(k, offset), src)?.accepted {
            return Ok(lo + offset);
        }
    }
}

/// Von Neumann's exponential generator.
pub fn exp_vn(src: &mut UniformSource) -> Result<f64> {
    exp_vn_with_offset(src).map(|(x, _)| x)
}

fn exp_vn_with_offset(src: &mut UniformSource) -> Result<(f64, u32)> {
    let mut offset = 0u32;
    loop {
        let w = src.next_uniform();
        if run_test(w, src)?.accepted {
            return Ok((offset as f64 + w, offset));
        }
        offset += 1;
    }
}

/// Exponential variate on the `ln 2`-wide dyadic intervals, with the
/// interval index.
pub fn exp_brent(table: &IntervalTable, src: &mut UniformSource) -> Result<(f64, usize)> {
    expect_scheme(table, Scheme::ExpBrent)?;
    let k = table.select_interval(src);
    Ok((sample_in_interval(table, k, src)?, k))
}

pub fn normal_forsythe(table: &IntervalTable, src: &mut UniformSource) -> Result<(f64, usize)> {
    expect_scheme(table, Scheme::NormalForsythe)?;
    signed_half_normal(table, src)
}

/// Normal variate on the dyadic half-normal table. Cheapest when the
/// source recycles leftovers.
pub fn normal_grand(table: &IntervalTable, src: &mut UniformSource) -> Result<(f64, usize)> {
    expect_scheme(table, Scheme::NormalBrent)?;
    signed_half_normal(table, src)
}

fn signed_half_normal(table: &IntervalTable, src: &mut UniformSource) -> Result<(f64, usize)> {
    let sign = src.random_sign();
    let k = table.select_interval(src);
    Ok((sign * sample_in_interval(table, k, src)?, k))
}

/// `-ln u`, redrawing the measure-zero `u = 0`.
pub fn exp_log_baseline(src: &mut UniformSource) -> f64 {
    loop {
        let u = src.next_uniform();
        if u > 0.0 {
            return -u.ln();
        }
    }
}

pub fn box_muller(src: &mut UniformSource) -> (f64, f64) {
    let u1 = 1.0 - src.next_uniform();
    let u2 = src.next_uniform();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Marsaglia's polar method.
pub fn polar(src: &mut UniformSource) -> (f64, f64) {
    loop {
        let v1 = 2.0 * src.next_uniform() - 1.0;
        let v2 = 2.0 * src.next_uniform() - 1.0;
        let s = v1 * v1 + v2 * v2;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (v1 * f, v2 * f);
        }
    }
}
