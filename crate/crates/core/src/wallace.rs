//! Wallace's pool generator.
//!
//! A pool of normal variates is regenerated in place: each pass groups the
//! pool into disjoint 4-blocks and multiplies every block by a fixed
//! orthogonal matrix, which keeps the joint density (a function of the
//! Euclidean norm only) unchanged. Uniforms are spent on the block grouping,
//! one word per pass, plus one normal per refill for the norm correction.
//! Consecutive pools share a lot of structure after a single pass, so a
//! refill runs [`ROUNDS_PER_REFRESH`] passes.
//!
//! A pool that is only ever rotated has a frozen sum of squares. Each refill
//! therefore rescales its output by `sqrt(S / norm_sq)` with `S` a fresh
//! chi-square(N) variate, so the emitted squared norm per refill has the
//! right distribution.

use crate::bitstream::UniformSource;
use crate::error::{Error, Result};
use crate::samplers::{default_table_len, normal_grand};
use crate::tables::IntervalTable;

pub const BLOCK: usize = 4;
/// Transform passes applied each time the pool is used up.
pub const ROUNDS_PER_REFRESH: usize = 3;
pub const MIN_POOL_SIZE: usize = 256;
pub const DEFAULT_POOL_SIZE: usize = 4096;

/// Entries are exactly representable, so `Q^T Q = I` holds bit for bit.
/// Not symmetric: alternate passes use the transpose.
pub const ORTHOGONAL_BLOCK: [[f64; BLOCK]; BLOCK] =
    [[0.5, 0.5, 0.5, 0.5], [0.5, -0.5, 0.5, -0.5], [0.5, 0.5, -0.5, -0.5], [-0.5, 0.5, 0.5, -0.5]];

/// `Q x`, or `Q^T x` when `transpose` is set.
pub fn transform_block(x: [f64; BLOCK], transpose: bool) -> [f64; BLOCK] {
    let q = &ORTHOGONAL_BLOCK;
    let mut y = [0.0; BLOCK];
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = (0..BLOCK).map(|j| if transpose { q[j][i] } else { q[i][j] } * x[j]).sum();
    }
    y
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone)]
pub struct NormalPool {
    values: Vec<f64>,
    pass_count: u64,
    norm_sq: f64,
    read_cursor: usize,
    scale: f64,
    bootstrap: IntervalTable,
}

impl NormalPool {
    /// Fills the pool with `size` GRAND variates drawn from `src`.
    pub fn new(size: usize, src: &mut UniformSource) -> Result<Self> {
        if size < MIN_POOL_SIZE || !size.is_multiple_of(BLOCK) {
            return Err(Error::PoolSize(size));
        }
        let bootstrap = IntervalTable::normal_brent(default_table_len(src.word_bits()))?;
        let values = (0..size).map(|_| normal_grand(&bootstrap, src).map(|(x, _)| x)).collect::<Result<Vec<_>>>()?;
        let norm_sq = values.iter().map(|x| x * x).sum();
        Ok(Self { values, pass_count: 0, norm_sq, read_cursor: 0, scale: 1.0, bootstrap })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pass_count(&self) -> u64 {
        self.pass_count
    }

    /// Squared norm recorded at initialisation.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Current squared norm of the raw pool.
    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }

    /// Factor applied to values emitted since the last refill.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// One transform pass. Blocks are `{p(4b), .., p(4b+3)}` under the
    /// affine permutation `p(i) = (offset + stride * i) mod N`, with stride
    /// and offset taken from one fresh word.
    pub fn refresh(&mut self, src: &mut UniformSource) {
        let n = self.values.len();
        let word = src.fresh_word() as usize;
        let mut stride = (word % n) | 1;
        while gcd(stride, n) != 1 {
            stride = (stride + 2) % n;
        }
        let offset = (word >> 24) % n;
        let transpose = self.pass_count % 2 == 1;
        for b in 0..n / BLOCK {
            let idx: [usize; BLOCK] = std::array::from_fn(|t| (offset + stride * (BLOCK * b + t)) % n);
            let x = idx.map(|i| self.values[i]);
            let y = transform_block(x, transpose);
            for (i, v) in idx.into_iter().zip(y) {
                self.values[i] = v;
            }
        }
        self.pass_count += 1;
    }

    /// Next pool value times the current scale; runs the transform passes
    /// and draws a new scale when the pool is used up.
    pub fn next_normal(&mut self, src: &mut UniformSource) -> Result<f64> {
        if self.read_cursor == self.values.len() {
            for _ in 0..ROUNDS_PER_REFRESH {
                self.refresh(src);
            }
            self.scale = self.draw_scale(src)?;
            self.read_cursor = 0;
        }
        let x = self.values[self.read_cursor] * self.scale;
        self.read_cursor += 1;
        Ok(x)
    }

    // Wilson-Hilferty: S = N (1 - 2/(9N) + z sqrt(2/(9N)))^3.
    fn draw_scale(&mut self, src: &mut UniformSource) -> Result<f64> {
        let (z, _) = normal_grand(&self.bootstrap, src)?;
        let n = self.values.len() as f64;
        let c = 2.0 / (9.0 * n);
        let s = n * (1.0 - c + z * c.sqrt()).powi(3);
        Ok((s / self.norm_sq).sqrt())
    }
}
