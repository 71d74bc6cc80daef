//! Toeplitz hashing over GF(2).
//!
//! The `m × n` matrix is `T_ij = diag[i − j + n − 1]`, so `diag[0]` is the
//! bottom-left corner `a_{−(n−1)}` and `diag[n − 1]` is `a_0`. Three
//! backends compute `r = T·v`: a word-parallel naive product, a single FFT
//! convolution, and a column/row blocked FFT that bounds memory.

mod bits;
mod blocked;
mod fft;
mod stream;

use thiserror::Error;

pub use bits::BitVector;
pub use blocked::{blocked_multiply, blocked_multiply_with, BlockPlan, DEFAULT_BLOCK_LEN};
pub use fft::{fft_multiply, MAX_COEFFICIENT, MAX_FFT_LEN};
pub use stream::{
    extract, extract_stream, monobit_sanity, read_seed_file, trials_to_bits, write_nist_ascii,
    write_raw_bits, Extraction, Monobit, StreamOptions, MONOBIT_MIN_LEN, MONOBIT_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("seed has {found} bits, expected m + n − 1 = {expected} (a seed file holds exactly that many bits rounded up to whole bytes)")]
    Dimension { expected: u64, found: u64 },
    #[error("input vector is empty")]
    EmptyInput,
    #[error("transform of length {len} with coefficients up to {coefficient} exceeds the exact-rounding budget; use a smaller block length")]
    Capacity { len: usize, coefficient: usize },
    #[error("rounding residual {residual} exceeds 0.25")]
    Precision { residual: f64 },
    #[error("monobit test needs at least {min} bits, got {found}")]
    TooShort { min: usize, found: usize },
    #[error("block length must be at least 1")]
    BlockLength,
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Trials(#[from] crate::trial_data::TrialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Output length after privacy amplification: `max(0, ⌊h_min⌋ − t_e)`.
pub fn output_length(h_min_bound: f64, t_e: u32) -> u64 {
    if !(h_min_bound > 0.0) {
        return 0;
    }
    (h_min_bound.floor() as u64).saturating_sub(t_e as u64)
}

/// Seed for an `m × n` Toeplitz matrix: `m + n − 1` diagonal bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzSeed {
    diag: BitVector,
    m: usize,
    n: usize,
}

impl ToeplitzSeed {
    pub fn new(diag: BitVector, m: usize, n: usize) -> Result<Self, ExtractError> {
        if n == 0 {
            return Err(ExtractError::EmptyInput);
        }
        let expected = (m + n - 1) as u64;
        if diag.len() as u64 != expected {
            return Err(ExtractError::Dimension {
                expected,
                found: diag.len() as u64,
            });
        }
        Ok(Self { diag, m, n })
    }

    pub fn diag(&self) -> &BitVector {
        &self.diag
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Matrix entry `T_ij`.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.diag.get(i + self.n - 1 - j)
    }
}

fn check_dims(seed: &ToeplitzSeed, v: &BitVector, m: usize) -> Result<(), ExtractError> {
    if v.is_empty() {
        return Err(ExtractError::EmptyInput);
    }
    let expected = (m + v.len() - 1) as u64;
    let found = seed.diag.len() as u64;
    if found != expected || seed.m != m || seed.n != v.len() {
        return Err(ExtractError::Dimension { expected, found });
    }
    Ok(())
}

/// Reference product. Row `i` of `T` is `diag[i .. i + n]` read backwards,
/// so each output bit is the parity of `diag[i..] & reverse(v)`.
pub fn naive_multiply(seed: &ToeplitzSeed, v: &BitVector, m: usize) -> Result<BitVector, ExtractError> {
    check_dims(seed, v, m)?;
    let rv = v.reversed();
    let mut out = BitVector::zeros(m);
    for i in 0..m {
        let mut acc = 0u32;
        for (k, w) in rv.words().iter().enumerate() {
            acc ^= (seed.diag.word_at((i + 64 * k) as i64) & w).count_ones();
        }
        if acc & 1 == 1 {
            out.set(i, true);
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> BitVector {
        BitVector::from_bools((0..len).map(|_| rng.random::<bool>()))
    }

    pub fn random_instance(seed: u64, m: usize, n: usize) -> (ToeplitzSeed, BitVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag = random_bits(&mut rng, m + n - 1);
        let v = random_bits(&mut rng, n);
        (ToeplitzSeed::new(diag, m, n).unwrap(), v)
    }

    /// Bit-by-bit definition, independent of the word tricks.
    pub fn definition(seed: &ToeplitzSeed, v: &BitVector) -> BitVector {
        BitVector::from_bools((0..seed.rows()).map(|i| {
            (0..seed.cols()).fold(false, |acc, j| acc ^ (seed.entry(i, j) & v.get(j)))
        }))
    }
}
