//! Plain Halton sequence, started at index 1.

use ndarray::Array2;

use crate::error::{CvError, Result};

pub const DEFAULT_MAX_DIM: usize = 20;

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101,
    103, 107, 109, 113, 127, 131,
];

/// First `d` primes.
pub fn first_primes(d: usize) -> Vec<u64> {
    let mut out: Vec<u64> = PRIMES.iter().copied().take(d).collect();
    let mut c = PRIMES[PRIMES.len() - 1] + 2;
    while out.len() < d {
        if (2..).take_while(|p| p * p <= c).all(|p| c % p != 0) {
            out.push(c);
        }
        c += 2;
    }
    out
}

/// Digit reversal of `i` in `base`, mapped to `[0, 1)`.
pub fn radical_inverse(base: u64, mut i: u64) -> f64 {
    debug_assert!(base >= 2);
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    x
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltonState {
    bases: Vec<u64>,
    next_index: u64,
}

impl HaltonState {
    pub fn new(d: usize) -> Result<Self> {
        Self::with_cap(d, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(d: usize, cap: usize) -> Result<Self> {
        if d == 0 || d > cap {
            return Err(CvError::invalid("d", format!("must be in 1..={cap}, got {d}")));
        }
        Ok(Self {
            bases: first_primes(d),
            next_index: 1,
        })
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Next `n` points as rows.
    pub fn take(&mut self, n: usize) -> Array2<f64> {
        let start = self.next_index;
        self.next_index += n as u64;
        Array2::from_shape_fn((n, self.dim()), |(i, j)| radical_inverse(self.bases[j], start + i as u64))
    }
}

/// Points `1..=n` of the `d`-dimensional Halton sequence.
pub fn halton_points(d: usize, n: usize) -> Result<Array2<f64>> {
    Ok(HaltonState::new(d)?.take(n))
}
