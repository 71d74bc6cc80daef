//! Bell-test trial records, their aggregation into counts tables, and the
//! on-disk formats for both.
//!
//! Trial file layout, one byte per trial:
//!
//! ```text
//! bit 0  test flag (1 = test trial, 0 = generation trial)
//! bit 1  x (Alice's setting)
//! bit 2  y (Bob's setting)
//! bit 3  a (Alice's outcome, 1 = click)
//! bit 4  b (Bob's outcome, 1 = click)
//! bits 5-7 reserved, must be zero
//! ```
//!
//! Counts CSV layout:
//!
//! ```text
//! setting,ab00,ab10,ab01,ab11
//! A1B1,...
//! ```
//!
//! with `A1B1, A1B2, A2B1, A2B2` mapping to `(x, y) = (0,0), (0,1), (1,0), (1,1)`.

use std::fmt;
use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

const RESERVED_MASK: u8 = 0b1110_0000;

/// Errors raised while decoding trial files or counts tables.
#[derive(Debug, Error)]
pub enum TrialError {
    #[error("malformed trial record at byte offset {offset}: {reason} (byte {byte:#010b})")]
    Malformed {
        offset: u64,
        byte: u8,
        reason: &'static str,
    },
    #[error("truncated trial stream: expected {expected} records, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("counts csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One Bell-test trial.
///
/// Outcome bits follow the click convention: `a = 1` means Alice's detector
/// fired. Generation trials (`test == false`) always carry `x = y = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TrialRecord {
    pub test: bool,
    pub x: bool,
    pub y: bool,
    pub a: bool,
    pub b: bool,
}

impl TrialRecord {
    pub const fn new(test: bool, x: bool, y: bool, a: bool, b: bool) -> Self {
        Self { test, x, y, a, b }
    }

    /// Builds a record from 0/1 integers, as they appear in data tables.
    pub fn from_bits(test: u8, x: u8, y: u8, a: u8, b: u8) -> Option<Self> {
        if [test, x, y, a, b].iter().any(|&v| v > 1) {
            return None;
        }
        Some(Self::new(test == 1, x == 1, y == 1, a == 1, b == 1))
    }

    pub fn encode(self) -> u8 {
        (self.test as u8)
            | (self.x as u8) << 1
            | (self.y as u8) << 2
            | (self.a as u8) << 3
            | (self.b as u8) << 4
    }

    /// Decodes one byte. `offset` is only used for error reporting.
    pub fn decode(byte: u8, offset: u64) -> Result<Self, TrialError> {
        if byte & RESERVED_MASK != 0 {
            return Err(TrialError::Malformed {
                offset,
                byte,
                reason: "reserved bits set",
            });
        }
        let record = Self::new(
            byte & 1 != 0,
            byte & 2 != 0,
            byte & 4 != 0,
            byte & 8 != 0,
            byte & 16 != 0,
        );
        if !record.test && (record.x || record.y) {
            return Err(TrialError::Malformed {
                offset,
                byte,
                reason: "generation trial with non-zero setting",
            });
        }
        Ok(record)
    }

    /// Index of the `(x, y)` setting in `A1B1, A1B2, A2B1, A2B2` order.
    pub fn setting_index(self) -> usize {
        2 * self.x as usize + self.y as usize
    }

    /// Index of the `ab` outcome in `ab00, ab10, ab01, ab11` column order.
    pub fn outcome_index(self) -> usize {
        self.a as usize + 2 * self.b as usize
    }
}

/// Decodes a complete in-memory trial file.
pub fn ingest_trials(bytes: &[u8]) -> Result<Vec<TrialRecord>, TrialError> {
    bytes
        .iter()
        .enumerate()
        .map(|(i, &b)| TrialRecord::decode(b, i as u64))
        .collect()
}

/// Decodes exactly `expected` records from a reader, failing on a short stream.
pub fn ingest_exact<R: Read>(reader: R, expected: u64) -> Result<Vec<TrialRecord>, TrialError> {
    let mut out = Vec::with_capacity(expected.min(1 << 24) as usize);
    for rec in TrialReader::new(reader).take(expected as usize) {
        out.push(rec?);
    }
    if (out.len() as u64) < expected {
        return Err(TrialError::Truncated {
            expected,
            found: out.len() as u64,
        });
    }
    Ok(out)
}

pub fn serialize_trials(records: &[TrialRecord]) -> Vec<u8> {
    records.iter().map(|r| r.encode()).collect()
}

pub fn write_trials<W: Write>(mut writer: W, records: &[TrialRecord]) -> io::Result<()> {
    for chunk in records.chunks(1 << 16) {
        let bytes: Vec<u8> = chunk.iter().map(|r| r.encode()).collect();
        writer.write_all(&bytes)?;
    }
    Ok(())
}

/// Streaming decoder over any byte source.
pub struct TrialReader<R> {
    inner: io::BufReader<R>,
    offset: u64,
    failed: bool,
}

impl<R: Read> TrialReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            inner: io::BufReader::with_capacity(1 << 16, reader),
            offset: 0,
            failed: false,
        }
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }
}

impl<R: Read> Iterator for TrialReader<R> {
    type Item = Result<TrialRecord, TrialError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let byte = match self.inner.fill_buf() {
            Ok([]) => return None,
            Ok(buf) => buf[0],
            Err(e) => {
                self.failed = true;
                return Some(Err(e.into()));
            }
        };
        self.inner.consume(1);
        let offset = self.offset;
        self.offset += 1;
        let rec = TrialRecord::decode(byte, offset);
        if rec.is_err() {
            self.failed = true;
        }
        Some(rec)
    }
}

/// Which records contribute to per-setting tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CountMode {
    /// Only test trials (spot-checking protocol).
    #[default]
    TestTrials,
    /// Every record, for runs where every trial is a Bell test (q = 1).
    AllTrials,
}

/// Labels of the four settings in table order.
pub const SETTING_LABELS: [&str; 4] = ["A1B1", "A1B2", "A2B1", "A2B2"];
/// Column names of the four outcomes in table order.
pub const OUTCOME_LABELS: [&str; 4] = ["ab00", "ab10", "ab01", "ab11"];
const CSV_HEADER: &str = "setting,ab00,ab10,ab01,ab11";

/// Event counts `N_{ab|xy}`, indexed `[setting][outcome]` with settings in
/// `A1B1, A1B2, A2B1, A2B2` order and outcomes in `ab00, ab10, ab01, ab11` order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CountsTable {
    pub counts: [[u64; 4]; 4],
}

impl CountsTable {
    pub fn new(counts: [[u64; 4]; 4]) -> Self {
        Self { counts }
    }

    pub fn get(&self, x: bool, y: bool, a: bool, b: bool) -> u64 {
        self.counts[2 * x as usize + y as usize][a as usize + 2 * b as usize]
    }

    pub fn add(&mut self, record: TrialRecord) {
        self.counts[record.setting_index()][record.outcome_index()] += 1;
    }

    /// Number of trials recorded for setting index `s`.
    pub fn trials_per_setting(&self, setting: usize) -> u64 {
        self.counts[setting].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..4).map(|s| self.trials_per_setting(s)).sum()
    }

    /// Cell-wise sum, used to merge shards.
    pub fn merge(&mut self, other: &CountsTable) {
        for (row, orow) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (c, o) in row.iter_mut().zip(orow.iter()) {
                *c += o;
            }
        }
    }
}

impl fmt::Display for CountsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(CSV_HEADER)?;
        f.write_str("\n")?;
        for (label, row) in SETTING_LABELS.iter().zip(self.counts.iter()) {
            writeln!(f, "{label},{},{},{},{}", row[0], row[1], row[2], row[3])?;
        }
        Ok(())
    }
}

/// Tallies records into a counts table.
pub fn aggregate<'a, I>(records: I, mode: CountMode) -> CountsTable
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let mut table = CountsTable::default();
    for rec in records {
        if mode == CountMode::AllTrials || rec.test {
            table.add(*rec);
        }
    }
    table
}

pub fn write_counts_csv(table: &CountsTable) -> Vec<u8> {
    table.to_string().into_bytes()
}

/// Parses the counts CSV. The header must match exactly and each setting
/// must appear exactly once.
pub fn read_counts_csv<R: Read>(reader: R) -> Result<CountsTable, TrialError> {
    let reader = io::BufReader::new(reader);
    let mut table = CountsTable::default();
    let mut seen = [false; 4];
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != CSV_HEADER {
                return Err(TrialError::Csv {
                    line: lineno,
                    message: format!("expected header {CSV_HEADER:?}, found {line:?}"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(TrialError::Csv {
                line: lineno,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let setting = SETTING_LABELS
            .iter()
            .position(|l| *l == fields[0])
            .ok_or_else(|| TrialError::Csv {
                line: lineno,
                message: format!("unknown setting label {:?}", fields[0]),
            })?;
        if seen[setting] {
            return Err(TrialError::Csv {
                line: lineno,
                message: format!("duplicate setting {}", fields[0]),
            });
        }
        seen[setting] = true;
        for (k, cell) in fields[1..].iter().enumerate() {
            table.counts[setting][k] = cell.parse::<u64>().map_err(|_| TrialError::Csv {
                line: lineno,
                message: format!("non-integer count {cell:?} in column {}", OUTCOME_LABELS[k]),
            })?;
        }
    }
    if !header_seen {
        return Err(TrialError::Csv {
            line: 1,
            message: "empty counts file".into(),
        });
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(TrialError::Csv {
            line: 0,
            message: format!("missing setting {}", SETTING_LABELS[missing]),
        });
    }
    Ok(table)
}
