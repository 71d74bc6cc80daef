use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{check_dims, BitVector, ExtractError, ToeplitzSeed};

/// Longest transform a single block may use (2²⁶ points, 1 GiB of complex buffer).
pub const MAX_FFT_LEN: usize = 1 << 26;
/// Largest integer a convolution coefficient may reach. With f64 transforms
/// of at most `MAX_FFT_LEN` points the rounding error at this magnitude stays
/// orders of magnitude below 0.25; the runtime residual check backs it up.
pub const MAX_COEFFICIENT: usize = 1 << 26;

const MAX_RESIDUAL: f64 = 0.25;

/// FFT plans and scratch for one transform length, reused across blocks.
pub(crate) struct Convolver {
    planner: FftPlanner<f64>,
    len: usize,
    forward: Option<Arc<dyn Fft<f64>>>,
    inverse: Option<Arc<dyn Fft<f64>>>,
    buf: Vec<Complex<f64>>,
    prod: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Convolver {
    pub(crate) fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            len: 0,
            forward: None,
            inverse: None,
            buf: Vec::new(),
            prod: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn prepare(&mut self, len: usize) {
        if self.len == len {
            return;
        }
        let forward = self.planner.plan_fft_forward(len);
        let inverse = self.planner.plan_fft_inverse(len);
        let scratch = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        self.forward = Some(forward);
        self.inverse = Some(inverse);
        self.scratch = vec![Complex::default(); scratch];
        self.buf = vec![Complex::default(); len];
        self.prod = vec![Complex::default(); len];
        self.len = len;
    }

    /// `r_i = ⊕_j seg[i − j + l − 1]·v_j` for `i < m`, where `l = v.len()`
    /// and `seg.len() = m + l − 1`.
    ///
    /// Both 0/1 sequences go into one complex transform (`seg + i·v`); the
    /// two spectra are separated with conjugate symmetry, multiplied, and the
    /// linear convolution is read at offsets `l − 1 .. l + m − 1`. The
    /// transform length is at least `m + l − 1`, so nothing wraps.
    pub(crate) fn toeplitz_block(
        &mut self,
        seg: &BitVector,
        v: &BitVector,
        m: usize,
    ) -> Result<BitVector, ExtractError> {
        let l = v.len();
        debug_assert_eq!(seg.len(), m + l - 1);
        if m == 0 {
            return Ok(BitVector::zeros(0));
        }
        let len = (m + l - 1).next_power_of_two();
        let coefficient = m.min(l);
        if len > MAX_FFT_LEN || coefficient > MAX_COEFFICIENT {
            return Err(ExtractError::Capacity { len, coefficient });
        }
        self.prepare(len);

        for c in self.buf.iter_mut() {
            *c = Complex::default();
        }
        for (k, c) in self.buf.iter_mut().take(seg.len()).enumerate() {
            c.re = f64::from((seg.words()[k / 64] >> (k % 64) & 1) as u8);
        }
        for (k, c) in self.buf.iter_mut().take(l).enumerate() {
            c.im = f64::from((v.words()[k / 64] >> (k % 64) & 1) as u8);
        }
        let forward = self.forward.as_ref().expect("prepared");
        forward.process_with_scratch(&mut self.buf, &mut self.scratch);

        // X = (Z_k + conj Z_{-k})/2, Y = (Z_k − conj Z_{-k})/(2i)
        for k in 0..len {
            let z = self.buf[k];
            let zc = self.buf[(len - k) % len].conj();
            let x = (z + zc) * 0.5;
            let d = (z - zc) * 0.5;
            let y = Complex::new(d.im, -d.re);
            self.prod[k] = x * y;
        }
        let inverse = self.inverse.as_ref().expect("prepared");
        inverse.process_with_scratch(&mut self.prod, &mut self.scratch);

        let scale = 1.0 / len as f64;
        let mut out = BitVector::zeros(m);
        let mut worst = 0.0f64;
        for i in 0..m {
            let c = self.prod[i + l - 1].re * scale;
            let rounded = c.round();
            worst = worst.max((c - rounded).abs());
            if (rounded as i64) & 1 == 1 {
                out.set(i, true);
            }
        }
        if worst >= MAX_RESIDUAL {
            return Err(ExtractError::Precision { residual: worst });
        }
        Ok(out)
    }
}

/// Single-transform product, bit-identical to `naive_multiply`.
pub fn fft_multiply(seed: &ToeplitzSeed, v: &BitVector, m: usize) -> Result<BitVector, ExtractError> {
    check_dims(seed, v, m)?;
    Convolver::new().toeplitz_block(seed.diag(), v, m)
}
