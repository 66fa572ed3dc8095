//! Seeded random numbers with a fixed, documented bit recipe.
//!
//! The generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`, 0.9
//! series) seeded through `SeedableRng::seed_from_u64`. A uniform draw takes
//! the next `u64`, keeps its top 53 bits and multiplies by `2^-53`, giving a
//! value in `[0, 1)`; a draw from `[lo, hi]` is `lo + (hi - lo) * u`. Any
//! implementation that reproduces these steps reproduces the golden files.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}
