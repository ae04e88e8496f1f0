//! Metered uniform source.
//!
//! Every fresh uniform is a `w`-bit fixed-point word read as a real in
//! `[0, 1)`. The source counts fresh words exactly; values handed back
//! through the recycled store and bits taken from the sign-bit reservoir
//! cost nothing extra, which is what the consumption reports measure.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_WORD_BITS: u32 = 53;
pub const MAX_WORD_BITS: u32 = 53;

pub struct UniformSource {
    engine: Box<dyn RngCore + Send>,
    word_bits: u32,
    scale: f64,
    draws: u64,
    recycled: Vec<f64>,
    recycling: bool,
    bit_reservoir: u64,
    reservoir_bits: u32,
}

impl UniformSource {
    /// ChaCha8 engine, 53-bit words, recycling enabled.
    pub fn new(seed: u64) -> Self {
        Self::with_engine(ChaCha8Rng::seed_from_u64(seed), DEFAULT_WORD_BITS).expect("default word length is valid")
    }

    pub fn with_word_bits(seed: u64, word_bits: u32) -> Result<Self> {
        Self::with_engine(ChaCha8Rng::seed_from_u64(seed), word_bits)
    }

    pub fn with_engine<R: RngCore + Send + 'static>(engine: R, word_bits: u32) -> Result<Self> {
        if word_bits == 0 || word_bits > MAX_WORD_BITS {
            return Err(Error::WordBits(word_bits));
        }
        Ok(Self {
            engine: Box::new(engine),
            word_bits,
            scale: (-(word_bits as f64)).exp2(),
            draws: 0,
            recycled: Vec::new(),
            recycling: true,
            bit_reservoir: 0,
            reservoir_bits: 0,
        })
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    /// Fresh words consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn recycled_len(&self) -> usize {
        self.recycled.len()
    }

    pub fn recycling(&self) -> bool {
        self.recycling
    }

    /// When disabled, run tests and [`geometric_index`](Self::geometric_index)
    /// stop feeding leftovers back; values already stored are kept.
    pub fn set_recycling(&mut self, enabled: bool) {
        self.recycling = enabled;
    }

    pub fn clear_recycled(&mut self) {
        self.recycled.clear();
    }

    /// One fresh `w`-bit word, right-aligned.
    pub fn fresh_word(&mut self) -> u64 {
        self.draws += 1;
        self.engine.next_u64() >> (64 - self.word_bits)
    }

    pub fn fresh_uniform(&mut self) -> f64 {
        self.fresh_word() as f64 * self.scale
    }

    /// A recycled value if one is stored, otherwise a fresh uniform.
    pub fn next_uniform(&mut self) -> f64 {
        match self.recycled.pop() {
            Some(u) => u,
            None => self.fresh_uniform(),
        }
    }

    /// Number of leading zero bits of a fresh word, plus one.
    ///
    /// `Prob(k) = 2^-k` for `k < w`; the all-zero word is clamped to `k = w`.
    /// The `w - k` bits after the leading one are pushed back as a recycled
    /// uniform when recycling is on.
    pub fn geometric_index(&mut self) -> u32 {
        let w = self.word_bits;
        let word = self.fresh_word();
        if word == 0 {
            return w;
        }
        let k = word.leading_zeros() - (64 - w) + 1;
        let rest = w - k;
        if self.recycling && rest > 0 {
            let leftover = word & ((1u64 << rest) - 1);
            self.recycled.push(leftover as f64 * (-(rest as f64)).exp2());
        }
        k
    }

    /// Pushes `(u_next - u_n) / (1 - u_n)`, the part of the terminating
    /// uniform of a run that carried no information about the run.
    pub fn recycle_pair(&mut self, u_n: f64, u_next: f64) -> Result<()> {
        // Degenerate denominator: nothing left to recycle.
        if u_n == 1.0 {
            return Ok(());
        }
        if !(0.0..1.0).contains(&u_n) || u_next < u_n || u_next >= 1.0 {
            return Err(Error::RecyclePair { u_n, u_next });
        }
        self.recycled.push((u_next - u_n) / (1.0 - u_n));
        Ok(())
    }

    pub fn push_recycled(&mut self, u: f64) {
        debug_assert!((0.0..1.0).contains(&u));
        self.recycled.push(u);
    }

    /// One bit from the reservoir; a fresh word refills it every `w` bits.
    pub fn next_bit(&mut self) -> bool {
        if self.reservoir_bits == 0 {
            self.bit_reservoir = self.fresh_word();
            self.reservoir_bits = self.word_bits;
        }
        let bit = self.bit_reservoir & 1 == 1;
        self.bit_reservoir >>= 1;
        self.reservoir_bits -= 1;
        bit
    }

    pub fn random_sign(&mut self) -> f64 {
        if self.next_bit() {
            1.0
        } else {
            -1.0
        }
    }
}

impl std::fmt::Debug for UniformSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UniformSource")
            .field("word_bits", &self.word_bits)
            .field("draws", &self.draws)
            .field("recycled", &self.recycled.len())
            .field("recycling", &self.recycling)
            .finish_non_exhaustive()
    }
}

/// Parses a 64-bit seed written in decimal or as `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> std::result::Result<u64, String> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => t.replace('_', "").parse::<u64>(),
    };
    parsed.map_err(|e| format!("invalid seed {text:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Engine that replays fixed 64-bit words.
    struct Replay(Vec<u64>, usize);

    impl RngCore for Replay {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            let v = self.0[self.1 % self.0.len()];
            self.1 += 1;
            v
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            for b in dst {
                *b = self.next_u64() as u8;
            }
        }
    }

    fn replay(words: &[u64]) -> UniformSource {
        UniformSource::with_engine(Replay(words.to_vec(), 0), 53).unwrap()
    }

    #[test]
    fn fresh_uniform_counts_one_draw() {
        let mut src = UniformSource::new(7);
        let u = src.next_uniform();
        assert!((0.0..1.0).contains(&u));
        assert_eq!(src.draws(), 1);
    }

    #[test]
    fn fresh_uniform_is_multiple_of_word_grid() {
        let mut src = UniformSource::with_word_bits(3, 20).unwrap();
        for _ in 0..1000 {
            let u = src.next_uniform();
            let scaled = u * (1u64 << 20) as f64;
            assert_eq!(scaled, scaled.trunc());
        }
    }

    #[test]
    fn recycled_value_takes_priority() {
        let mut src = UniformSource::new(7);
        src.push_recycled(0.5);
        assert_eq!(src.next_uniform(), 0.5);
        assert_eq!(src.draws(), 0);
    }

    #[test]
    fn equal_seeds_replay_identically() {
        let mut a = UniformSource::new(42);
        let mut b = UniformSource::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn word_bits_are_validated() {
        assert_eq!(UniformSource::with_word_bits(0, 0).unwrap_err(), Error::WordBits(0));
        assert!(UniformSource::with_word_bits(0, 54).is_err());
        assert!(UniformSource::with_word_bits(0, 1).is_ok());
    }

    #[test]
    fn geometric_index_top_bit_set() {
        // Top bit of the 53-bit word set: u in [1/2, 1).
        let mut src = replay(&[0x8000_0000_0000_0000]);
        assert_eq!(src.geometric_index(), 1);
    }

    #[test]
    fn geometric_index_of_point_three() {
        let word = ((0.3f64 * (1u64 << 53) as f64) as u64) << 11;
        let mut src = replay(&[word]);
        assert_eq!(src.geometric_index(), 2);
        assert_eq!(src.draws(), 1);
    }

    #[test]
    fn geometric_index_all_zero_clamps() {
        let mut src = replay(&[0]);
        assert_eq!(src.geometric_index(), 53);
        assert_eq!(src.recycled_len(), 0);
    }

    #[test]
    fn geometric_leftover_is_left_justified() {
        // 53-bit word 0b001 1010... : k = 3, remaining 50 bits start with 1010.
        let word53: u64 = (0b0011010u64) << 46;
        let mut src = replay(&[word53 << 11]);
        assert_eq!(src.geometric_index(), 3);
        assert_eq!(src.recycled_len(), 1);
        assert_eq!(src.next_uniform(), 0.625);
        assert_eq!(src.draws(), 1);
    }

    #[test]
    fn geometric_leftover_dropped_when_recycling_off() {
        let mut src = UniformSource::new(1);
        src.set_recycling(false);
        for _ in 0..100 {
            src.geometric_index();
        }
        assert_eq!(src.recycled_len(), 0);
    }

    #[test]
    fn recycle_pair_formula() {
        let mut src = UniformSource::new(0);
        src.recycle_pair(0.25, 0.625).unwrap();
        assert_eq!(src.next_uniform(), 0.5);
        src.recycle_pair(0.0, 0.375).unwrap();
        assert_eq!(src.next_uniform(), 0.375);
        assert_eq!(src.draws(), 0);
    }

    #[test]
    fn recycle_pair_degenerate_denominator_is_skipped() {
        let mut src = UniformSource::new(0);
        src.recycle_pair(1.0, 1.0).unwrap();
        assert_eq!(src.recycled_len(), 0);
    }

    #[test]
    fn recycle_pair_rejects_bad_order() {
        let mut src = UniformSource::new(0);
        assert!(src.recycle_pair(0.6, 0.5).is_err());
        assert!(src.recycle_pair(0.2, 1.0).is_err());
    }

    #[test]
    fn sign_bits_are_pooled() {
        let mut src = UniformSource::new(9);
        for _ in 0..53 {
            src.random_sign();
        }
        assert_eq!(src.draws(), 1);
        src.random_sign();
        assert_eq!(src.draws(), 2);
    }

    #[test]
    fn sign_reads_low_bits_first() {
        let mut src = replay(&[0b101 << 11]);
        assert_eq!(src.random_sign(), 1.0);
        assert_eq!(src.random_sign(), -1.0);
        assert_eq!(src.random_sign(), 1.0);
    }

    #[test]
    fn seeds_parse_in_decimal_and_hex() {
        assert_eq!(parse_seed("42"), Ok(42));
        assert_eq!(parse_seed("0x2A"), Ok(42));
        assert_eq!(parse_seed("0xffffffffffffffff"), Ok(u64::MAX));
        assert!(parse_seed("-1").is_err());
        assert!(parse_seed("0xg").is_err());
    }
}
