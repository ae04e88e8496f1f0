use thiserror::Error;

use crate::tables::Scheme;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("word length must be in 1..=53 bits, got {0}")]
    WordBits(u32),

    #[error("recycle pair ({u_n}, {u_next}) violates 0 <= u_n <= u_next < 1")]
    RecyclePair { u_n: f64, u_next: f64 },

    #[error("run test value {0} is outside [0, 1]")]
    ExponentOutOfRange(f64),

    #[error("run length exceeded {0} comparisons")]
    RunTooLong(u32),

    #[error("interval [{lo}, {hi}] is empty or not finite")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("exponent audit failed: g({x}) = {g} is outside [0, 1]")]
    DensityAudit { x: f64, g: f64 },

    #[error("table length {len} outside 1..={max}")]
    TableLength { len: usize, max: usize },

    #[error("boundary inversion for k = {0} did not converge")]
    RootFinding(usize),

    #[error("half-normal tail needs x >= 0, got {0}")]
    NegativeArgument(f64),

    #[error("sampler expects a {expected:?} table, got {found:?}")]
    SchemeMismatch { expected: Scheme, found: Scheme },

    #[error("pool size {0} must be a multiple of 4 and at least 256")]
    PoolSize(usize),

    #[error("samples must be non-empty")]
    EmptySamples,

    #[error("samples must be sorted ascending (index {0})")]
    UnsortedSamples(usize),

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("observed and expected lengths differ ({observed} vs {expected})")]
    BinMismatch { observed: usize, expected: usize },

    #[error("expected probabilities sum to {0}, not 1")]
    ProbabilitySum(f64),

    #[error("fewer than two bins remain after merging")]
    TooFewBins,

    #[error("significance level {0} outside (0, 1)")]
    Alpha(f64),
}
