use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fft::Convolver;
use super::{check_dims, BitVector, ExtractError, ToeplitzSeed};

pub const DEFAULT_BLOCK_LEN: usize = 1 << 20;

/// How a product is cut into work units.
///
/// Columns are split into blocks of `block_len` input bits (the last one
/// zero-padded). Rows are optionally split into blocks of `row_block` output
/// bits, rounded up to a multiple of 64, so a unit needs
/// `O(row_block + block_len)` memory however large `m` is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub block_len: usize,
    /// `None` keeps all `m` rows in every unit.
    pub row_block: Option<usize>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Shuffles the unit order with this seed. The result must not change.
    pub shuffle: Option<u64>,
}

impl Default for BlockPlan {
    fn default() -> Self {
        Self {
            block_len: DEFAULT_BLOCK_LEN,
            row_block: None,
            workers: None,
            shuffle: None,
        }
    }
}

impl BlockPlan {
    pub fn with_block_len(block_len: usize) -> Self {
        Self {
            block_len,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Unit {
    row_start: usize,
    rows: usize,
    col: usize,
}

/// Column-blocked product: per-block FFT products XOR-merged.
pub fn blocked_multiply(seed: &ToeplitzSeed, v: &BitVector, m: usize, l: usize) -> Result<BitVector, ExtractError> {
    blocked_multiply_with(seed, v, m, &BlockPlan::with_block_len(l))
}

pub fn blocked_multiply_with(
    seed: &ToeplitzSeed,
    v: &BitVector,
    m: usize,
    plan: &BlockPlan,
) -> Result<BitVector, ExtractError> {
    check_dims(seed, v, m)?;
    multiply_diag(seed.diag(), v, m, plan)
}

/// Product against a raw diagonal of length `m + v.len() − 1`; the
/// streaming driver calls this on windows of a larger seed.
pub(crate) fn multiply_diag(
    diag: &BitVector,
    v: &BitVector,
    m: usize,
    plan: &BlockPlan,
) -> Result<BitVector, ExtractError> {
    if plan.block_len == 0 {
        return Err(ExtractError::BlockLength);
    }
    debug_assert_eq!(diag.len(), m + v.len() - 1);
    let units = plan_units(m, v.len(), plan);
    run_units(diag, v, m, plan, &units)
}

fn plan_units(m: usize, n: usize, plan: &BlockPlan) -> Vec<Unit> {
    let rows = match plan.row_block {
        Some(r) => r.max(1).div_ceil(64) * 64,
        None => m.max(1),
    };
    let cols = n.div_ceil(plan.block_len);
    let mut units = Vec::new();
    let mut row_start = 0;
    while row_start < m {
        let rb = rows.min(m - row_start);
        for col in 0..cols {
            units.push(Unit {
                row_start,
                rows: rb,
                col,
            });
        }
        row_start += rb;
    }
    if let Some(s) = plan.shuffle {
        units.shuffle(&mut ChaCha8Rng::seed_from_u64(s));
    }
    units
}

/// Unit `(r0, c)` multiplies rows `r0 ..` of `T` by input block `c`. Its
/// diagonal segment starts at `n − l − c·l + r0`; indices outside the seed
/// are the zero padding of the last input block.
fn run_unit(
    conv: &mut Convolver,
    diag: &BitVector,
    v: &BitVector,
    l: usize,
    unit: Unit,
) -> Result<Option<BitVector>, ExtractError> {
    let vb = v.window((unit.col * l) as i64, l);
    if vb.count_ones() == 0 {
        return Ok(None);
    }
    let start = v.len() as i64 - l as i64 - (unit.col * l) as i64 + unit.row_start as i64;
    let seg = diag.window(start, unit.rows + l - 1);
    conv.toeplitz_block(&seg, &vb, unit.rows).map(Some)
}

#[cfg(feature = "parallel")]
fn run_units(diag: &BitVector, v: &BitVector, m: usize, plan: &BlockPlan, units: &[Unit]) -> Result<BitVector, ExtractError> {
    use rayon::prelude::*;

    let l = plan.block_len;
    let work = || {
        units
            .par_iter()
            .try_fold(
                || (Convolver::new(), BitVector::zeros(m)),
                |(mut conv, mut acc), &unit| {
                    if let Some(r) = run_unit(&mut conv, diag, v, l, unit)? {
                        acc.xor_at(unit.row_start, &r);
                    }
                    Ok((conv, acc))
                },
            )
            .map(|r| r.map(|(_, acc)| acc))
            .try_reduce(
                || BitVector::zeros(m),
                |mut a, b| {
                    a.xor_assign(&b);
                    Ok(a)
                },
            )
    };
    match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| ExtractError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_units(diag: &BitVector, v: &BitVector, m: usize, plan: &BlockPlan, units: &[Unit]) -> Result<BitVector, ExtractError> {
    let mut conv = Convolver::new();
    let mut acc = BitVector::zeros(m);
    for &unit in units {
        if let Some(r) = run_unit(&mut conv, diag, v, plan.block_len, unit)? {
            acc.xor_at(unit.row_start, &r);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{fft_multiply, naive_multiply};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_block_equals_fft() {
        let (seed, v) = random_instance(7, 300, 1000);
        assert_eq!(blocked_multiply(&seed, &v, 300, 1000).unwrap(), fft_multiply(&seed, &v, 300).unwrap());
        assert_eq!(blocked_multiply(&seed, &v, 300, 5000).unwrap(), fft_multiply(&seed, &v, 300).unwrap());
    }

    #[test]
    fn block_sweep_matches_naive() {
        let (seed, v) = random_instance(8, 257, 2500);
        let oracle = naive_multiply(&seed, &v, 257).unwrap();
        for l in [1, 3, 64, 1000] {
            assert_eq!(blocked_multiply(&seed, &v, 257, l).unwrap(), oracle, "l = {l}");
        }
    }

    #[test]
    fn row_blocks_match_naive() {
        let (seed, v) = random_instance(9, 1000, 777);
        let oracle = naive_multiply(&seed, &v, 1000).unwrap();
        for rows in [1, 64, 100, 999, 4096] {
            let plan = BlockPlan {
                block_len: 200,
                row_block: Some(rows),
                ..BlockPlan::default()
            };
            assert_eq!(blocked_multiply_with(&seed, &v, 1000, &plan).unwrap(), oracle, "rows = {rows}");
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let (seed, v) = random_instance(10, 2048, 20_000);
        let run = |workers| {
            let plan = BlockPlan {
                block_len: 1000,
                row_block: Some(512),
                workers: Some(workers),
                shuffle: None,
            };
            blocked_multiply_with(&seed, &v, 2048, &plan).unwrap()
        };
        let one = run(1);
        assert_eq!(run(4), one);
        assert_eq!(run(16), one);
        assert_eq!(one, naive_multiply(&seed, &v, 2048).unwrap());
    }

    #[test]
    fn zero_block_len_is_rejected() {
        let (seed, v) = random_instance(11, 4, 4);
        assert!(matches!(blocked_multiply(&seed, &v, 4, 0), Err(ExtractError::BlockLength)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn backends_agree(s in any::<u64>(), m in 1usize..300, n in 1usize..600, l in 1usize..700,
                          rows in proptest::option::of(1usize..300)) {
            let (seed, v) = random_instance(s, m, n);
            let oracle = naive_multiply(&seed, &v, m).unwrap();
            prop_assert_eq!(&fft_multiply(&seed, &v, m).unwrap(), &oracle);
            let plan = BlockPlan { block_len: l, row_block: rows, ..BlockPlan::default() };
            prop_assert_eq!(&blocked_multiply_with(&seed, &v, m, &plan).unwrap(), &oracle);
        }

        #[test]
        fn schedule_does_not_matter(s in any::<u64>(), order in any::<u64>()) {
            let (seed, v) = random_instance(s, 500, 900);
            let base = BlockPlan { block_len: 50, row_block: Some(128), workers: None, shuffle: None };
            let shuffled = BlockPlan { shuffle: Some(order), ..base };
            prop_assert_eq!(
                blocked_multiply_with(&seed, &v, 500, &base).unwrap(),
                blocked_multiply_with(&seed, &v, 500, &shuffled).unwrap()
            );
        }
    }
}
