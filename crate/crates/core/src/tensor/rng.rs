//! Seeded random source: ChaCha8 with one independent stream per consumer.

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    inner: ChaCha8Rng,
}

/// Where a generator is in its sequence; enough to rebuild it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngPosition {
    pub key: [u8; 32],
    pub stream: u64,
    pub word: u128,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream keyed by `(seed, stream)`. Used to give model
    /// initialization, shuffling and data generation their own sequences so
    /// that enabling one consumer never perturbs another.
    pub fn stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn position(&self) -> RngPosition {
        RngPosition { key: self.inner.get_seed(), stream: self.inner.get_stream(), word: self.inner.get_word_pos() }
    }

    pub fn from_position(p: RngPosition) -> Self {
        let mut inner = ChaCha8Rng::from_seed(p.key);
        inner.set_stream(p.stream);
        inner.set_word_pos(p.word);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform in `[lo, hi)`; `lo < hi` is the caller's job.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }

    /// Standard normal by Box-Muller, one draw per pair. Uses `libm` so the
    /// value never depends on which float backend a build links.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// Uniform integer in `[0, n)`; `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

/// `rows × cols` matrix of uniform draws in `[lo, hi)`.
pub fn rng_uniform(rng: &mut Rng, lo: f64, hi: f64, rows: usize, cols: usize) -> Result<Matrix> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::argument(alloc::format!("uniform range requires lo < hi, got [{lo}, {hi})")));
    }
    let data = (0..rows * cols).map(|_| rng.uniform(lo, hi)).collect();
    Matrix::new(rows, cols, data)
}
