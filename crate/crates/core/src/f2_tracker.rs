//! Second-moment estimators that can be queried after every update.
//!
//! Two layouts are provided:
//!
//! * [`TrackerMode::Median`] hashes each item into one of `b` buckets per row,
//!   adds a 4-wise independent sign there, and answers with the lower median
//!   over rows of the row's sum of squared counters.
//! * [`TrackerMode::EightWise`] keeps `k` counters per copy, each fed by an
//!   8-wise independent sign of every item, and answers with the lower median
//!   over copies of the mean squared counter.
//!
//! Both keep the per-row sum of squares incrementally, so a query costs
//! `O(rows)` rather than `O(rows * buckets)`.

use crate::error::SketchError;
use crate::hashing::{BucketHash, SignFamily};
use crate::seed::{self, tag};
use crate::{StateSize, WORD_BYTES};

/// Counters are rejected once the stream length reaches this bound.
pub const COUNTER_LIMIT: u64 = 1 << 62;

/// Items are embedded into the 8-wise family as `(j << 40) | (i mod 2^40)`.
const EIGHTWISE_ITEM_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackerMode {
    Median,
    EightWise,
}

/// Tracker dimensions.
///
/// In median mode `rows x buckets` is the counter table. In eight-wise mode
/// `rows` is the number of independent copies and `buckets` is `k`, the
/// number of sign rows (one counter each) inside a copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub mode: TrackerMode,
    pub rows: usize,
    pub buckets: usize,
    pub epsilon: f64,
    pub delta: f64,
}

impl TrackerConfig {
    /// Size for additive error `epsilon * F2` with failure probability `delta`:
    /// `ceil(8 ln(1/delta))` rows of `ceil(12 / epsilon^2)` counters.
    pub fn from_accuracy(epsilon: f64, delta: f64, mode: TrackerMode) -> Result<Self, SketchError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(SketchError::InvalidEpsilon {
                value: epsilon,
                range: "(0, 1)",
            });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SketchError::InvalidDelta(delta));
        }
        Ok(Self {
            mode,
            rows: ((8.0 * (1.0 / delta).ln()).ceil() as usize).max(1),
            buckets: (12.0 / (epsilon * epsilon)).ceil() as usize,
            epsilon,
            delta,
        })
    }

    /// An explicit median-mode table, bypassing the accuracy formulas.
    pub fn explicit(rows: usize, buckets: usize) -> Result<Self, SketchError> {
        if rows == 0 {
            return Err(SketchError::ZeroDimension("rows"));
        }
        if buckets == 0 {
            return Err(SketchError::ZeroDimension("buckets"));
        }
        Ok(Self {
            mode: TrackerMode::Median,
            rows,
            buckets,
            epsilon: f64::NAN,
            delta: f64::NAN,
        })
    }

    /// The tracker used inside HH2: nominal accuracy `(1/100, 1/20)`, but a
    /// single row of 30 buckets, which is accurate enough for detecting
    /// doublings and keeps the update cost small.
    pub fn practical() -> Self {
        Self {
            mode: TrackerMode::Median,
            rows: 1,
            buckets: 30,
            epsilon: 0.01,
            delta: 0.05,
        }
    }

    pub fn counters(&self) -> usize {
        self.rows * self.buckets
    }

    fn validate(&self) -> Result<(), SketchError> {
        if self.rows == 0 {
            return Err(SketchError::ZeroDimension("rows"));
        }
        if self.buckets == 0 {
            return Err(SketchError::ZeroDimension("buckets"));
        }
        if self.mode == TrackerMode::EightWise && self.buckets >= 1 << (61 - EIGHTWISE_ITEM_BITS) {
            return Err(SketchError::InvalidParameter(format!(
                "eight-wise mode supports at most 2^{} sign rows",
                61 - EIGHTWISE_ITEM_BITS
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum RowHash {
    Median {
        bucket: BucketHash,
        signs: SignFamily,
    },
    EightWise {
        signs: SignFamily,
    },
}

#[derive(Debug, Clone)]
struct Row {
    hash: RowHash,
    counters: Vec<i64>,
    sum_squares: u128,
}

#[inline]
fn bump(counters: &mut [i64], sum_squares: &mut u128, j: usize, sign: i64) {
    let c = counters[j];
    // (c + s)^2 - c^2 = 2cs + 1
    *sum_squares = sum_squares.wrapping_add_signed(2 * c as i128 * sign as i128 + 1);
    counters[j] = c + sign;
}

impl Row {
    fn recompute(&mut self) {
        self.sum_squares = self
            .counters
            .iter()
            .map(|&c| (c as i128 * c as i128) as u128)
            .sum();
    }
}

/// A running `F2` estimator.
#[derive(Debug, Clone)]
pub struct F2Tracker {
    config: TrackerConfig,
    seed: u64,
    rows: Vec<Row>,
    len: u64,
    scratch: Vec<u128>,
}

impl F2Tracker {
    pub fn new(config: TrackerConfig, seed: u64) -> Result<Self, SketchError> {
        config.validate()?;
        let rows = (0..config.rows)
            .map(|t| build_row(&config, seed, t))
            .collect();
        Ok(Self {
            config,
            seed,
            rows,
            len: 0,
            scratch: Vec::with_capacity(config.rows),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of updates since construction or the last reset.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn update(&mut self, item: u64) -> Result<(), SketchError> {
        if self.len >= COUNTER_LIMIT {
            return Err(SketchError::CounterOverflow);
        }
        self.len += 1;
        for row in &mut self.rows {
            match &row.hash {
                RowHash::Median { bucket, signs } => {
                    let (j, s) = (bucket.bucket(item), signs.eval(item));
                    bump(&mut row.counters, &mut row.sum_squares, j, s);
                }
                RowHash::EightWise { signs } => {
                    let base = item & ((1 << EIGHTWISE_ITEM_BITS) - 1);
                    for j in 0..row.counters.len() {
                        let s = signs.eval(((j as u64) << EIGHTWISE_ITEM_BITS) | base);
                        bump(&mut row.counters, &mut row.sum_squares, j, s);
                    }
                }
            }
        }
        Ok(())
    }

    /// Lower median over rows of the per-row estimate; never negative.
    pub fn query(&mut self) -> f64 {
        if self.rows.len() == 1 {
            return self.row_estimate(0);
        }
        self.scratch.clear();
        self.scratch.extend(self.rows.iter().map(|r| r.sum_squares));
        let mid = (self.scratch.len() - 1) / 2;
        let (_, &mut m, _) = self.scratch.select_nth_unstable(mid);
        self.scale(m)
    }

    fn row_estimate(&self, t: usize) -> f64 {
        self.scale(self.rows[t].sum_squares)
    }

    fn scale(&self, sum_squares: u128) -> f64 {
        match self.config.mode {
            TrackerMode::Median => sum_squares as f64,
            TrackerMode::EightWise => sum_squares as f64 / self.config.buckets as f64,
        }
    }

    /// Zero every counter and draw fresh hash functions from `seed`.
    pub fn reset(&mut self, seed: u64) {
        self.seed = seed;
        self.len = 0;
        for (t, row) in self.rows.iter_mut().enumerate() {
            let fresh = build_row(&self.config, seed, t);
            row.hash = fresh.hash;
            row.counters.fill(0);
            row.sum_squares = 0;
        }
    }

    /// Counters in row-major order.
    pub fn counters(&self) -> impl Iterator<Item = i64> + '_ {
        self.rows.iter().flat_map(|r| r.counters.iter().copied())
    }

    /// Overwrite the counters (row-major) and the stream length.
    pub(crate) fn restore(&mut self, counters: &[i64], len: u64) -> Result<(), SketchError> {
        if counters.len() != self.config.counters() {
            return Err(SketchError::InvalidParameter(format!(
                "expected {} counters, got {}",
                self.config.counters(),
                counters.len()
            )));
        }
        for (row, chunk) in self
            .rows
            .iter_mut()
            .zip(counters.chunks(self.config.buckets))
        {
            row.counters.copy_from_slice(chunk);
            row.recompute();
        }
        self.len = len;
        Ok(())
    }
}

fn build_row(config: &TrackerConfig, seed: u64, t: usize) -> Row {
    let t = t as u64;
    let hash = match config.mode {
        TrackerMode::Median => RowHash::Median {
            bucket: BucketHash::seeded(config.buckets, seed::derive(seed, tag::TRACKER_ROW, 2 * t))
                .expect("bucket count validated"),
            signs: SignFamily::seeded(4, seed::derive(seed, tag::TRACKER_ROW, 2 * t + 1))
                .expect("degree 4 is supported"),
        },
        TrackerMode::EightWise => RowHash::EightWise {
            signs: SignFamily::seeded(8, seed::derive(seed, tag::TRACKER_ROW, 2 * t + 1))
                .expect("degree 8 is supported"),
        },
    };
    Row {
        hash,
        counters: vec![0; config.buckets],
        sum_squares: 0,
    }
}

impl StateSize for F2Tracker {
    fn state_bytes(&self) -> usize {
        let hash_words: usize = self
            .rows
            .iter()
            .map(|r| match &r.hash {
                RowHash::Median { bucket: _, signs } => 2 + signs.degree(),
                RowHash::EightWise { signs } => signs.degree(),
            })
            .sum();
        // counters, hash coefficients, one running sum per row, stream length
        (self.config.counters() + hash_words + self.rows.len() + 1) * WORD_BYTES
    }
}
