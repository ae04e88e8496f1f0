//! Interval subdivisions for the four historical schemes.
//!
//! The half-line is cut into intervals `I_k = [a_{k-1}, a_k)` narrow enough
//! that the exponent, shifted so its minimum on `I_k` is zero, stays inside
//! `[0, 1]`. Dyadic schemes pick `k` with probability `2^-k` by counting
//! leading zero bits and so store no probability table at all.

use std::f64::consts::{E, LN_2, PI};
use std::fmt;
use std::io::{self, Write};

use crate::bitstream::UniformSource;
use crate::error::{Error, Result};
use crate::special::erfc;

pub const MAX_TABLE_LEN: usize = 64;

/// Bisection stops at this bracket width; Newton takes over from there.
const BISECT_WIDTH: f64 = 1e-10;
/// Newton steps smaller than this count as converged.
const NEWTON_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Exponential, `I_k = [k-1, k)`.
    ExpVonNeumann,
    /// Exponential, `I_k = [(k-1) ln 2, k ln 2)`.
    ExpBrent,
    /// Normal, `a_k = sqrt(2k - 1)`.
    NormalForsythe,
    /// Normal, half-normal mass `2^-k` in each interval.
    NormalBrent,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::ExpVonNeumann, Scheme::ExpBrent, Scheme::NormalForsythe, Scheme::NormalBrent];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::ExpVonNeumann => "exp_vn",
            Scheme::ExpBrent => "exp_brent",
            Scheme::NormalForsythe => "normal_forsythe",
            Scheme::NormalBrent => "normal_brent",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.tag() == tag)
    }

    /// Selection probabilities are exactly `2^-k`.
    pub fn is_dyadic(self) -> bool {
        matches!(self, Scheme::ExpBrent | Scheme::NormalBrent)
    }

    pub fn is_normal(self) -> bool {
        matches!(self, Scheme::NormalForsythe | Scheme::NormalBrent)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `sqrt(2/pi) * int_x^inf exp(-t^2/2) dt`.
pub fn half_normal_tail(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::NegativeArgument(x));
    }
    Ok(erfc(x * std::f64::consts::FRAC_1_SQRT_2))
}

fn half_normal_density(x: f64) -> f64 {
    (2.0 / PI).sqrt() * (-0.5 * x * x).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTable {
    scheme: Scheme,
    boundaries: Vec<f64>,
    select_probs: Option<Vec<f64>>,
    cumulative: Option<Vec<f64>>,
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 || len > MAX_TABLE_LEN {
        return Err(Error::TableLength { len, max: MAX_TABLE_LEN });
    }
    Ok(())
}

impl IntervalTable {
    pub fn build(scheme: Scheme, len: usize) -> Result<Self> {
        match scheme {
            Scheme::ExpVonNeumann => Self::exp_von_neumann(len),
            Scheme::ExpBrent => Self::exp_brent(len),
            Scheme::NormalForsythe => Self::normal_forsythe(len),
            Scheme::NormalBrent => Self::normal_brent(len),
        }
    }

    pub fn exp_brent(len: usize) -> Result<Self> {
        check_len(len)?;
        let boundaries = (0..=len).map(|k| k as f64 * LN_2).collect();
        Ok(Self::new(Scheme::ExpBrent, boundaries, None))
    }

    pub fn exp_von_neumann(len: usize) -> Result<Self> {
        check_len(len)?;
        let boundaries = (0..=len).map(|k| k as f64).collect();
        let probs = (1..=len).map(|k| (E - 1.0) * (-(k as f64)).exp()).collect();
        Ok(Self::new(Scheme::ExpVonNeumann, boundaries, Some(probs)))
    }

    pub fn normal_forsythe(len: usize) -> Result<Self> {
        check_len(len)?;
        let mut boundaries = vec![0.0];
        boundaries.extend((1..=len).map(|k| ((2 * k - 1) as f64).sqrt()));
        let tails: Vec<f64> = boundaries.iter().map(|&a| half_normal_tail(a)).collect::<Result<_>>()?;
        let probs = tails.windows(2).map(|t| t[0] - t[1]).collect();
        Ok(Self::new(Scheme::NormalForsythe, boundaries, Some(probs)))
    }

    /// Solves `half_normal_tail(a_k) = 2^-k` for each boundary.
    pub fn normal_brent(len: usize) -> Result<Self> {
        check_len(len)?;
        let mut boundaries = vec![0.0];
        for k in 1..=len {
            let prev = boundaries[k - 1];
            boundaries.push(invert_tail((-(k as f64)).exp2(), prev).ok_or(Error::RootFinding(k))?);
        }
        Ok(Self::new(Scheme::NormalBrent, boundaries, None))
    }

    fn new(scheme: Scheme, boundaries: Vec<f64>, select_probs: Option<Vec<f64>>) -> Self {
        let cumulative = select_probs.as_ref().map(|p| {
            p.iter()
                .scan(0.0, |acc, q| {
                    *acc += q;
                    Some(*acc)
                })
                .collect()
        });
        Self { scheme, boundaries, select_probs, cumulative }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Number of intervals `K`.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `a_0, ..., a_K`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Stored selection probabilities; `None` for dyadic schemes.
    pub fn select_probs(&self) -> Option<&[f64]> {
        self.select_probs.as_deref()
    }

    /// `(a_{k-1}, a_k)` for `k` in `1..=K`.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.boundaries[k - 1], self.boundaries[k])
    }

    /// `q_k`, stored or `2^-k`.
    pub fn selection_prob(&self, k: usize) -> f64 {
        match &self.select_probs {
            Some(p) => p[k - 1],
            None => (-(k as f64)).exp2(),
        }
    }

    /// `G_k` at `a_{k-1} + offset`, computed from the offset so the left end
    /// is exactly zero. Rounding overshoot above 1 (a few ulps at the right
    /// end of a width-2 Forsythe interval) is folded back to 1; every
    /// uniform is below 1 so the run test cannot tell the two apart.
    #[inline]
    pub fn exponent_at_offset(&self, k: usize, offset: f64) -> f64 {
        let g = if self.scheme.is_normal() {
            let a = self.boundaries[k - 1];
            0.5 * offset * (2.0 * a + offset)
        } else {
            offset
        };
        debug_assert!(g <= 1.0 + 1e-12, "G_{k} = {g}");
        g.min(1.0)
    }

    /// `G_k(x)` for `x` in `I_k`.
    pub fn shifted_exponent(&self, k: usize, x: f64) -> f64 {
        self.exponent_at_offset(k, x - self.boundaries[k - 1])
    }

    /// Largest value of `G_k` on `I_k`, reached at the right end.
    pub fn gmax(&self, k: usize) -> f64 {
        let (lo, hi) = self.interval(k);
        let offset = hi - lo;
        if self.scheme.is_normal() {
            0.5 * offset * (2.0 * lo + offset)
        } else {
            offset
        }
    }

    /// Picks an interval index in `1..=K`.
    ///
    /// Dyadic schemes count leading zeros of one fresh word; the others
    /// locate one uniform in the cumulative table. Mass beyond `K` lands in
    /// interval `K`.
    pub fn select_interval(&self, src: &mut UniformSource) -> usize {
        let k = match &self.cumulative {
            None => src.geometric_index() as usize,
            Some(cum) => {
                let u = src.next_uniform();
                cum.partition_point(|&c| c <= u) + 1
            }
        };
        k.min(self.len())
    }

    /// Plain-text dump: a `#scheme=<tag> K=<K>` header, then one
    /// `k a_{k-1} a_k q_k gmax_k` row per interval at 17 significant digits.
    pub fn write_dump<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "#scheme={} K={}", self.scheme.tag(), self.len())?;
        for k in 1..=self.len() {
            let (lo, hi) = self.interval(k);
            writeln!(out, "{} {:.16e} {:.16e} {:.16e} {:.16e}", k, lo, hi, self.selection_prob(k), self.gmax(k))?;
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is ASCII")
    }
}

/// Boundary `a` beyond `lower` with `half_normal_tail(a) = target`.
fn invert_tail(target: f64, lower: f64) -> Option<f64> {
    let tail = |x: f64| half_normal_tail(x).expect("x >= 0");
    let mut lo = lower;
    let mut hi = lower + 1.0;
    while tail(hi) > target {
        lo = hi;
        hi += 1.0;
        if hi > 60.0 {
            return None;
        }
    }
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..20 {
        let step = (tail(x) - target) / half_normal_density(x);
        x += step;
        if step.abs() < NEWTON_TOL {
            return Some(x);
        }
    }
    None
}
