//! Seeded randomness and weight initialization.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood 2014; the seeding
//! generator of Java's `SplittableRandom`). It is fully specified by its
//! update constants, so equal seeds produce bit-identical streams on every
//! platform and toolchain.

use crate::matrix::Matrix;

/// Deterministic 64-bit PRNG (SplitMix64).
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in [0, n). `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }

    /// Derives an independent stream, e.g. to separate init draws from
    /// batch shuffling.
    pub fn fork(&mut self, tag: u64) -> SeededRng {
        SeededRng::new(self.next_u64() ^ tag)
    }
}

/// Xavier/Glorot uniform initialization: entries drawn from [-b, b] with
/// b = sqrt(6 / (rows + cols)).
pub fn xavier_init(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    uniform_init(rows, cols, bound, rng)
}

/// Matrix with entries drawn uniformly from [-bound, bound].
pub fn uniform_init(rows: usize, cols: usize, bound: f64, rng: &mut SeededRng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.uniform(-bound, bound);
    }
    m
}
