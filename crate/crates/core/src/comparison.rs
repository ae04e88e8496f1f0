//! The comparison kernel.
//!
//! Starting from `u_1 = G`, uniforms are drawn while they keep strictly
//! decreasing. The run stops at the first `u_n <= u_{n+1}`; the run length
//! `n` is odd with probability exactly `exp(-G)`, so odd parity accepts a
//! candidate without evaluating any transcendental function.

use std::fmt;

use crate::bitstream::UniformSource;
use crate::error::{Error, Result};

/// Runs longer than this abort with [`Error::RunTooLong`]. With `G <= 1`
/// the chance of reaching it is below `1/64!`.
pub const MAX_RUN_LENGTH: u32 = 64;

/// Grid points used to audit a [`DensitySpec`] exponent at construction.
pub const AUDIT_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunResult {
    pub accepted: bool,
    pub n: u32,
    /// `(u_n, u_{n+1})`, with `u_n <= u_{n+1}`.
    pub terminal_pair: (f64, f64),
    /// Uniforms requested from the source, recycled or fresh.
    pub uniforms_used: u32,
}

/// One descending-run test with `u_1 = g`.
///
/// The terminating pair is recycled into `src` when the source has
/// recycling enabled.
pub fn run_test(g: f64, src: &mut UniformSource) -> Result<RunResult> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::ExponentOutOfRange(g));
    }
    let mut last = g;
    let mut n = 1u32;
    let mut used = 0u32;
    loop {
        let u = src.next_uniform();
        used += 1;
        if u < last {
            n += 1;
            if n > MAX_RUN_LENGTH {
                return Err(Error::RunTooLong(MAX_RUN_LENGTH));
            }
            last = u;
        } else {
            if src.recycling() {
                src.recycle_pair(last, u)?;
            }
            return Ok(RunResult { accepted: n % 2 == 1, n, terminal_pair: (last, u), uniforms_used: used });
        }
    }
}

/// `G^(n-1)/(n-1)! - G^n/n!`, the probability that a run started at `G`
/// has length exactly `n`. Returns 0 for `n == 0`.
pub fn run_length_pmf(g: f64, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // term = G^(n-1)/(n-1)!
    let mut term = 1.0;
    for i in 1..n {
        term *= g / i as f64;
    }
    term - term * g / n as f64
}

/// Mean run length, `sum_{m>=0} G^m/m! = exp(G)`, summed as a series.
pub fn expected_run_length(g: f64) -> f64 {
    let mut sum: f64 = 0.0;
    let mut term = 1.0;
    let mut m = 0u32;
    while term > 1e-18 * sum.max(1.0) {
        sum += term;
        m += 1;
        term *= g / m as f64;
    }
    sum
}

/// Probability that the run length is odd, summed over odd `n` until the
/// terms vanish. Equals `exp(-G)`.
pub fn odd_parity_probability(g: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 1;
    // lead = G^(n-1)/(n-1)!, which bounds p_n and everything after it
    let mut lead = 1.0;
    while lead > 1e-18 && n <= 2 * MAX_RUN_LENGTH {
        sum += run_length_pmf(g, n);
        lead *= g * g / (n * (n + 1)) as f64;
        n += 2;
    }
    sum
}

/// A density proportional to `exp(-g(x))` on `[lo, hi]` with `0 <= g <= 1`.
pub struct DensitySpec {
    g: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
}

impl DensitySpec {
    /// Audits `g` on an evenly spaced grid of [`AUDIT_POINTS`] points
    /// including both endpoints.
    pub fn new<F>(g: F, lo: f64, hi: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        let step = (hi - lo) / (AUDIT_POINTS - 1) as f64;
        for i in 0..AUDIT_POINTS {
            let x = if i == AUDIT_POINTS - 1 { hi } else { lo + step * i as f64 };
            let gx = g(x);
            if !(0.0..=1.0).contains(&gx) {
                return Err(Error::DensityAudit { x, g: gx });
            }
        }
        Ok(Self { g: Box::new(g), lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn exponent(&self, x: f64) -> f64 {
        (self.g)(x)
    }
}

impl fmt::Debug for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensitySpec").field("lo", &self.lo).field("hi", &self.hi).finish_non_exhaustive()
    }
}

/// Draws `w` uniform on `[lo, hi)` until a run test on `g(w)` accepts.
/// Rejected candidates are redrawn on the same interval.
pub fn sample_density(spec: &DensitySpec, src: &mut UniformSource) -> Result<f64> {
    let width = spec.hi - spec.lo;
    loop {
        let w = spec.lo + width * src.next_uniform();
        if run_test(spec.exponent(w), src)?.accepted {
            return Ok(w);
        }
    }
}
