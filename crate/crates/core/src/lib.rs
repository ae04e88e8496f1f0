//! Random variates by the Forsythe-von Neumann comparison method.
//!
//! A density `exp(-G(x))` with `0 <= G <= 1` on a bounded interval is
//! sampled by drawing a candidate and accepting it when a descending run of
//! uniforms started at `G` has odd length. The exponential and normal
//! distributions are split into such intervals under four historical
//! schemes. A metered [`UniformSource`] counts every fresh uniform word, so
//! the cost of each scheme can be measured directly.

pub mod bitstream;
pub mod cli;
pub mod comparison;
pub mod error;
pub mod samplers;
pub mod special;
pub mod stats;
pub mod tables;
pub mod wallace;

pub use bitstream::{parse_seed, UniformSource};
pub use comparison::{
    expected_run_length, odd_parity_probability, run_length_pmf, run_test, sample_density, DensitySpec, RunResult,
};
pub use error::{Error, Result};
pub use samplers::{Sample, Sampler, SamplerConfig, SamplerKind};
pub use stats::{measure_consumption, ConsumptionReport, Moments, TestReport};
pub use tables::{half_normal_tail, IntervalTable, Scheme};
pub use wallace::NormalPool;
