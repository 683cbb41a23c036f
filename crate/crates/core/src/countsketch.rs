//! CountSketch: `r` rows of `b` signed counters.
//!
//! Row `t` adds `sign_t(i)` to cell `h_t(i)`; the estimate of `f_i` is the
//! lower median over rows of `sign_t(i) * table[t][h_t(i)]`. An optional
//! single-candidate mode keeps the item with the largest current estimate
//! among those seen, which is how the single heavy hitter baseline reports
//! its answer.

use crate::error::SketchError;
use crate::hashing::{BucketHash, SignFamily};
use crate::seed::{self, tag};
use crate::{StateSize, WORD_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountSketchConfig {
    pub rows: usize,
    pub buckets: usize,
    /// Independence of the per-row sign hashes.
    pub sign_degree: usize,
    pub track_candidate: bool,
}

impl CountSketchConfig {
    pub fn new(rows: usize, buckets: usize) -> Self {
        Self {
            rows,
            buckets,
            sign_degree: 2,
            track_candidate: false,
        }
    }

    /// The single heavy hitter baseline: two buckets, `ceil(3 + log2 n)` rows,
    /// candidate tracking on.
    pub fn baseline(n: u64) -> Self {
        let rows = (3.0 + (n.max(1) as f64).log2()).ceil() as usize;
        Self {
            rows,
            buckets: 2,
            sign_degree: 2,
            track_candidate: true,
        }
    }

    pub fn with_sign_degree(mut self, degree: usize) -> Self {
        self.sign_degree = degree;
        self
    }

    pub fn with_candidate(mut self) -> Self {
        self.track_candidate = true;
        self
    }
}

#[derive(Debug, Clone)]
struct RowHash {
    bucket: BucketHash,
    sign: SignFamily,
}

#[derive(Debug, Clone)]
pub struct CountSketch {
    config: CountSketchConfig,
    seed: u64,
    hashes: Vec<RowHash>,
    table: Vec<i64>,
    candidate: Option<(u64, i64)>,
    scratch: Vec<i64>,
}

impl CountSketch {
    pub fn new(config: CountSketchConfig, seed: u64) -> Result<Self, SketchError> {
        if config.rows == 0 {
            return Err(SketchError::ZeroDimension("rows"));
        }
        if config.buckets == 0 {
            return Err(SketchError::ZeroDimension("buckets"));
        }
        let hashes = (0..config.rows as u64)
            .map(|t| {
                Ok(RowHash {
                    bucket: BucketHash::seeded(
                        config.buckets,
                        seed::derive(seed, tag::CS_ROW, 2 * t),
                    )?,
                    sign: SignFamily::seeded(
                        config.sign_degree,
                        seed::derive(seed, tag::CS_ROW, 2 * t + 1),
                    )?,
                })
            })
            .collect::<Result<_, SketchError>>()?;
        Ok(Self {
            config,
            seed,
            hashes,
            table: vec![0; config.rows * config.buckets],
            candidate: None,
            scratch: Vec::with_capacity(config.rows),
        })
    }

    pub fn config(&self) -> &CountSketchConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn update(&mut self, item: u64) {
        let b = self.config.buckets;
        for (t, h) in self.hashes.iter().enumerate() {
            self.table[t * b + h.bucket.bucket(item)] += h.sign.eval(item);
        }
        if self.config.track_candidate {
            let est = self.estimate(item);
            match self.candidate {
                Some((c, _)) if c != item => {
                    let held = self.estimate(c);
                    self.candidate = Some(if est > held { (item, est) } else { (c, held) });
                }
                _ => self.candidate = Some((item, est)),
            }
        }
    }

    /// Lower median over rows of the signed cell values.
    pub fn estimate(&mut self, item: u64) -> i64 {
        let b = self.config.buckets;
        self.scratch.clear();
        self.scratch.extend(
            self.hashes
                .iter()
                .enumerate()
                .map(|(t, h)| h.sign.eval(item) * self.table[t * b + h.bucket.bucket(item)]),
        );
        lower_median(&mut self.scratch)
    }

    /// Per-row signed cell values for `item`.
    pub fn row_estimates(&self, item: u64) -> Vec<i64> {
        let b = self.config.buckets;
        self.hashes
            .iter()
            .enumerate()
            .map(|(t, h)| h.sign.eval(item) * self.table[t * b + h.bucket.bucket(item)])
            .collect()
    }

    /// Cell of `item` in row `t`.
    pub fn bucket(&self, t: usize, item: u64) -> usize {
        self.hashes[t].bucket.bucket(item)
    }

    pub fn sign(&self, t: usize, item: u64) -> i64 {
        self.hashes[t].sign.eval(item)
    }

    /// Lower median over rows of the row's sum of squared cells.
    pub fn f2_estimate(&self) -> f64 {
        let mut sums: Vec<u128> = self
            .table
            .chunks(self.config.buckets)
            .map(|row| row.iter().map(|&c| (c as i128 * c as i128) as u128).sum())
            .collect();
        let mid = (sums.len() - 1) / 2;
        *sums.select_nth_unstable(mid).1 as f64
    }

    /// The held item; an arriving item replaces it when its estimate exceeds
    /// the held item's current estimate.
    pub fn top_candidate(&self) -> Option<u64> {
        self.candidate.map(|(i, _)| i)
    }

    /// Counters in row-major order.
    pub fn table(&self) -> &[i64] {
        &self.table
    }

    pub(crate) fn restore(
        &mut self,
        table: &[i64],
        candidate: Option<(u64, i64)>,
    ) -> Result<(), SketchError> {
        if table.len() != self.table.len() {
            return Err(SketchError::InvalidParameter(format!(
                "expected {} counters, got {}",
                self.table.len(),
                table.len()
            )));
        }
        self.table.copy_from_slice(table);
        self.candidate = candidate;
        Ok(())
    }
}

pub(crate) fn lower_median(values: &mut [i64]) -> i64 {
    let mid = (values.len() - 1) / 2;
    *values.select_nth_unstable(mid).1
}

impl StateSize for CountSketch {
    fn state_bytes(&self) -> usize {
        let hash_words = self.config.rows * (2 + self.config.sign_degree);
        let candidate_words = if self.config.track_candidate { 2 } else { 0 };
        (self.table.len() + hash_words + candidate_words) * WORD_BYTES
    }
}
