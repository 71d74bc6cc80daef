use std::io::{self, Read, Seek, SeekFrom, Write};

use super::blocked::{multiply_diag, BlockPlan, DEFAULT_BLOCK_LEN};
use super::{check_dims, BitVector, ExtractError, ToeplitzSeed};
use crate::trial_data::{TrialError, TrialReader, TrialRecord};

/// Raw-data encoding: two bits per trial, `a` then `b`.
pub fn trials_to_bits(records: &[TrialRecord]) -> BitVector {
    BitVector::from_bools(records.iter().flat_map(|r| [r.a, r.b]))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub bits: BitVector,
    /// Set when `m = 0`: nothing could be extracted.
    pub empty: bool,
}

/// Row block used by [`extract`] when none is given.
const DEFAULT_ROW_BLOCK: usize = 1 << 20;

/// Extracts `m` bits from `input` with the blocked backend, keeping each
/// work unit at `O(max(l, 2²⁰) + l)` bits.
pub fn extract(input: &BitVector, seed: &ToeplitzSeed, m: usize, l: usize) -> Result<Extraction, ExtractError> {
    check_dims(seed, input, m)?;
    if m == 0 {
        return Ok(Extraction {
            bits: BitVector::zeros(0),
            empty: true,
        });
    }
    let plan = BlockPlan {
        block_len: l,
        row_block: Some(DEFAULT_ROW_BLOCK.max(l)),
        ..BlockPlan::default()
    };
    Ok(Extraction {
        bits: multiply_diag(seed.diag(), input, m, &plan)?,
        empty: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamOptions {
    pub plan: BlockPlan,
    /// Column blocks read from the trial stream per pass.
    pub batch_blocks: usize,
}

impl Default for StreamOptions {
    fn default() -> Self {
        Self {
            plan: BlockPlan {
                block_len: DEFAULT_BLOCK_LEN,
                row_block: Some(DEFAULT_ROW_BLOCK),
                ..BlockPlan::default()
            },
            batch_blocks: 16,
        }
    }
}

/// Reads seed bits `[start, start + len)` from a raw seed file holding
/// `total` bits; positions outside `[0, total)` read as zero.
fn read_seed_window<S: Read + Seek>(seed: &mut S, total: u64, start: i64, len: usize) -> io::Result<BitVector> {
    let lo = start.max(0) as u64;
    let hi = ((start + len as i64).max(0) as u64).min(total);
    if hi <= lo {
        return Ok(BitVector::zeros(len));
    }
    let byte_lo = lo / 8;
    let byte_hi = hi.div_ceil(8);
    seed.seek(SeekFrom::Start(byte_lo))?;
    let mut buf = vec![0u8; (byte_hi - byte_lo) as usize];
    seed.read_exact(&mut buf)?;
    let chunk = BitVector::from_bytes(&buf, ((byte_hi - byte_lo) * 8) as usize);
    // bits of `chunk` past `hi` belong to the pad or the next window; cut them off
    let chunk = chunk.window(0, (hi - byte_lo * 8) as usize);
    Ok(chunk.window(start - (byte_lo * 8) as i64, len))
}

/// Loads a whole seed file holding `m + n − 1` bits.
pub fn read_seed_file<S: Read + Seek>(mut seed: S, m: usize, n: usize) -> Result<ToeplitzSeed, ExtractError> {
    let total = (m + n - 1) as u64;
    check_seed_size(&mut seed, total)?;
    let diag = read_seed_window(&mut seed, total, 0, total as usize)?;
    ToeplitzSeed::new(diag, m, n)
}

fn check_seed_size<S: Seek>(seed: &mut S, total_bits: u64) -> Result<(), ExtractError> {
    let bytes = seed.seek(SeekFrom::End(0))?;
    if bytes != total_bits.div_ceil(8) {
        return Err(ExtractError::Dimension {
            expected: total_bits,
            found: bytes * 8,
        });
    }
    Ok(())
}

struct BitSource<R> {
    trials: TrialReader<R>,
    pending: Option<bool>,
}

impl<R: Read> BitSource<R> {
    fn take(&mut self, count: usize, expected_trials: u64) -> Result<BitVector, ExtractError> {
        let mut out = BitVector::zeros(0);
        while out.len() < count {
            if let Some(b) = self.pending.take() {
                out.push(b);
                continue;
            }
            match self.trials.next() {
                Some(rec) => {
                    let rec = rec?;
                    out.push(rec.a);
                    self.pending = Some(rec.b);
                }
                None => {
                    return Err(TrialError::Truncated {
                        expected: expected_trials,
                        found: self.trials.offset(),
                    }
                    .into())
                }
            }
        }
        Ok(out)
    }
}

/// Streaming extraction from a trial byte stream of `n_trials` records and a
/// seekable raw seed file of `m + 2·n_trials − 1` bits.
///
/// The input is consumed `batch_blocks · l` bits at a time. Each batch is a
/// narrower Toeplitz product against the seed window its columns touch, so
/// only that window and the `m`-bit accumulator are held in memory.
pub fn extract_stream<R: Read, S: Read + Seek>(
    trials: R,
    n_trials: u64,
    mut seed: S,
    m: usize,
    opts: &StreamOptions,
) -> Result<Extraction, ExtractError> {
    let n = 2 * n_trials;
    if n == 0 {
        return Err(ExtractError::EmptyInput);
    }
    if opts.plan.block_len == 0 {
        return Err(ExtractError::BlockLength);
    }
    let total = m as u64 + n - 1;
    check_seed_size(&mut seed, total)?;
    if m == 0 {
        return Ok(Extraction {
            bits: BitVector::zeros(0),
            empty: true,
        });
    }
    let mut source = BitSource {
        trials: TrialReader::new(trials),
        pending: None,
    };
    let batch = (opts.batch_blocks.max(1) as u64).saturating_mul(opts.plan.block_len as u64);
    let mut acc = BitVector::zeros(m);
    let mut consumed = 0u64;
    while consumed < n {
        let nb = batch.min(n - consumed) as usize;
        let v = source.take(nb, n_trials)?;
        // columns consumed .. consumed + nb see diag[t + n − consumed − nb]
        let start = n as i64 - (consumed + nb as u64) as i64;
        let diag = read_seed_window(&mut seed, total, start, m + nb - 1)?;
        acc.xor_assign(&multiply_diag(&diag, &v, m, &opts.plan)?);
        consumed += nb as u64;
    }
    Ok(Extraction { bits: acc, empty: false })
}

pub const MONOBIT_MIN_LEN: usize = 100;
/// Flag threshold on `|#1 − #0|/√len`; two-sided tail ≈ 6e-5.
pub const MONOBIT_THRESHOLD: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monobit {
    pub statistic: f64,
    pub flagged: bool,
}

pub fn monobit_sanity(bits: &BitVector) -> Result<Monobit, ExtractError> {
    if bits.len() < MONOBIT_MIN_LEN {
        return Err(ExtractError::TooShort {
            min: MONOBIT_MIN_LEN,
            found: bits.len(),
        });
    }
    let ones = bits.count_ones() as f64;
    let zeros = bits.len() as f64 - ones;
    let statistic = (ones - zeros).abs() / (bits.len() as f64).sqrt();
    Ok(Monobit {
        statistic,
        flagged: statistic > MONOBIT_THRESHOLD,
    })
}

/// Raw binary output, bit 0 of byte 0 = `r_0`.
pub fn write_raw_bits<W: Write>(mut w: W, bits: &BitVector) -> io::Result<()> {
    w.write_all(&bits.to_bytes())
}

/// ASCII export for external statistical suites: one `0`/`1` per line.
pub fn write_nist_ascii<W: Write>(w: W, bits: &BitVector) -> io::Result<()> {
    let mut w = io::BufWriter::new(w);
    for b in bits.iter() {
        w.write_all(if b { b"1\n" } else { b"0\n" })?;
    }
    w.flush()
}
