//! All `eps`-heavy hitters in `O(eps^-2 log(1/(eps delta)))` words.
//!
//! Items are hashed into `b` buckets in each of `r` rows, in the style of
//! CountSketch. Each cell runs a single heavy hitter finder on the items
//! routed to it, and an independent `r x b` [`CountSketch`] estimates the
//! frequency of every candidate at query time. Candidates whose estimate is
//! below `(3 eps / 4) * sqrt(F2_hat)` are discarded.
//!
//! [`BpTreeMode::Standard`] runs a full [`Hh2`] in every cell.
//! [`BpTreeMode::Fast`] shares one periodically restarted [`F2Tracker`]
//! among all cells: whenever the tracker of the current phase reaches
//! `2^k`, every cell restarts its [`Hh1`] with `sigma = (eps / 16) 2^(k/2)`
//! and a fresh tracker starts on the rest of the stream. Each cell keeps one
//! retained candidate, replaced at a restart only when the auxiliary sketch
//! rates the newly found item higher.

use crate::countsketch::{CountSketch, CountSketchConfig};
use crate::error::{SketchError, SnapshotError};
use crate::f2_tracker::{F2Tracker, TrackerConfig, TrackerMode};
use crate::hashing::BucketHash;
use crate::hh1::Hh1;
use crate::hh2::Hh2;
use crate::seed::{self, tag};
use crate::snapshot::{Decoder, Encoder};
use crate::{StateSize, WORD_BYTES};

const MAGIC: &[u8; 4] = b"BPTR";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BpTreeMode {
    Standard,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpTreeConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Domain size `n`; item identifiers are expected in `[0, n)`.
    pub domain: u64,
    /// Buckets per row; `ceil((K / eps)^2)` when unset.
    pub buckets: Option<usize>,
    /// Rows; `ceil(log2(1 / (eps delta))) + 3` when unset.
    pub rows: Option<usize>,
    pub mode: BpTreeMode,
    /// Heaviness `K` a bucketed heavy hitter is expected to reach.
    pub heaviness: f64,
    /// Tracker inside each cell (standard) or the shared tracker (fast).
    pub tracker: TrackerConfig,
    pub seed: u64,
}

impl BpTreeConfig {
    pub const DEFAULT_HEAVINESS: f64 = 32.0;

    pub fn new(epsilon: f64, delta: f64, domain: u64, seed: u64) -> Self {
        Self {
            epsilon,
            delta,
            domain,
            buckets: None,
            rows: None,
            mode: BpTreeMode::Standard,
            heaviness: Self::DEFAULT_HEAVINESS,
            tracker: TrackerConfig::practical(),
            seed,
        }
    }

    pub fn with_mode(mut self, mode: BpTreeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_buckets(mut self, buckets: usize) -> Self {
        self.buckets = Some(buckets);
        self
    }

    pub fn with_rows(mut self, rows: usize) -> Self {
        self.rows = Some(rows);
        self
    }

    pub fn with_tracker(mut self, tracker: TrackerConfig) -> Self {
        self.tracker = tracker;
        self
    }

    pub fn resolved_buckets(&self) -> usize {
        self.buckets
            .unwrap_or_else(|| (self.heaviness / self.epsilon).powi(2).ceil() as usize)
    }

    pub fn resolved_rows(&self) -> usize {
        self.rows.unwrap_or_else(|| {
            (1.0 / (self.epsilon * self.delta)).log2().ceil().max(0.0) as usize + 3
        })
    }

    /// Failure probability `delta / (4 ceil(log2(1/eps)) + 8)` for the shared
    /// tracker of each phase in fast mode.
    pub fn fast_tracker_delta(&self) -> f64 {
        self.delta / (4.0 * (1.0 / self.epsilon).log2().ceil() + 8.0)
    }

    pub fn validate(&self) -> Result<(), SketchError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(SketchError::InvalidEpsilon {
                value: self.epsilon,
                range: "(0, 1]",
            });
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SketchError::InvalidDelta(self.delta));
        }
        if self.domain == 0 {
            return Err(SketchError::EmptyDomain);
        }
        if !(self.heaviness > 0.0 && self.heaviness.is_finite()) {
            return Err(SketchError::InvalidParameter(format!(
                "heaviness must be positive, got {}",
                self.heaviness
            )));
        }
        if self.resolved_buckets() == 0 {
            return Err(SketchError::ZeroDimension("buckets"));
        }
        if self.resolved_rows() == 0 {
            return Err(SketchError::ZeroDimension("rows"));
        }
        if self.tracker.rows == 0 || self.tracker.buckets == 0 {
            return Err(SketchError::ZeroDimension("tracker dimensions"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct FastCell {
    /// Phase the instance belongs to; stale instances are rebuilt on first touch.
    epoch: u64,
    hh1: Option<Hh1>,
    retained: Option<u64>,
}

#[derive(Debug, Clone)]
enum Cells {
    Standard(Vec<Hh2>),
    Fast {
        tracker: F2Tracker,
        /// Phase index `k`; phase `k` ends when its tracker reaches `2^(k+1)`.
        epoch: u64,
        cells: Vec<FastCell>,
        /// Cells holding an instance of the current phase.
        touched: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct BpTree {
    config: BpTreeConfig,
    rows: usize,
    buckets: usize,
    routing: Vec<BucketHash>,
    aux: CountSketch,
    cells: Cells,
    len: u64,
}

impl BpTree {
    pub fn new(config: BpTreeConfig) -> Result<Self, SketchError> {
        config.validate()?;
        let (rows, buckets) = (config.resolved_rows(), config.resolved_buckets());
        let seed = config.seed;
        let routing = (0..rows as u64)
            .map(|t| BucketHash::seeded(buckets, seed::derive(seed, tag::BP_ROUTING, t)))
            .collect::<Result<_, _>>()?;
        let aux = CountSketch::new(
            CountSketchConfig::new(rows, buckets),
            seed::derive(seed, tag::BP_AUX, 0),
        )?;
        let cells = match config.mode {
            BpTreeMode::Standard => Cells::Standard(
                (0..(rows * buckets) as u64)
                    .map(|c| {
                        Hh2::with_tracker(
                            config.domain,
                            config.tracker,
                            seed::derive(seed, tag::BP_CELL, c),
                        )
                    })
                    .collect::<Result<_, _>>()?,
            ),
            BpTreeMode::Fast => Cells::Fast {
                tracker: F2Tracker::new(config.tracker, seed::derive(seed, tag::TRACKER, 0))?,
                epoch: 0,
                cells: vec![
                    FastCell {
                        epoch: 0,
                        hh1: None,
                        retained: None,
                    };
                    rows * buckets
                ],
                touched: Vec::new(),
            },
        };
        Ok(Self {
            config,
            rows,
            buckets,
            routing,
            aux,
            cells,
            len: 0,
        })
    }

    pub fn config(&self) -> &BpTreeConfig {
        &self.config
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn aux(&self) -> &CountSketch {
        &self.aux
    }

    /// Number of F2 trackers kept in memory.
    pub fn live_trackers(&self) -> usize {
        match &self.cells {
            Cells::Standard(cells) => cells.len(),
            Cells::Fast { .. } => 1,
        }
    }

    /// Synchronized restarts performed so far (fast mode; always 0 otherwise).
    pub fn restarts(&self) -> u64 {
        match &self.cells {
            Cells::Standard(_) => 0,
            Cells::Fast { epoch, .. } => *epoch,
        }
    }

    /// The `sigma` every cell uses in the current phase (fast mode).
    pub fn fast_sigma(&self) -> Option<f64> {
        match &self.cells {
            Cells::Standard(_) => None,
            Cells::Fast { epoch, .. } => Some(fast_sigma(self.config.epsilon, *epoch)),
        }
    }

    /// Cell index of `item` in row `t`.
    pub fn cell(&self, t: usize, item: u64) -> usize {
        t * self.buckets + self.routing[t].bucket(item)
    }

    /// # Panics
    ///
    /// If the stream exceeds [`crate::f2_tracker::COUNTER_LIMIT`] updates.
    pub fn update(&mut self, item: u64) {
        self.len += 1;
        self.aux.update(item);
        let (epsilon, domain, seed) = (self.config.epsilon, self.config.domain, self.config.seed);
        match &mut self.cells {
            Cells::Standard(cells) => {
                for (t, h) in self.routing.iter().enumerate() {
                    cells[t * self.buckets + h.bucket(item)].update(item);
                }
            }
            Cells::Fast {
                tracker,
                epoch,
                cells,
                touched,
            } => {
                tracker
                    .update(item)
                    .expect("stream too long for 64-bit counters");
                if tracker.query() >= 2f64.powi(*epoch as i32 + 1) {
                    for &c in touched.iter() {
                        let cell = &mut cells[c];
                        let found = cell.hh1.as_ref().and_then(Hh1::query);
                        cell.retained = better(&mut self.aux, cell.retained, found);
                    }
                    touched.clear();
                    *epoch += 1;
                    tracker.reset(seed::derive(seed, tag::TRACKER, *epoch));
                    tracker.update(item).expect("fresh tracker");
                }
                for (t, h) in self.routing.iter().enumerate() {
                    let c = t * self.buckets + h.bucket(item);
                    let cell = &mut cells[c];
                    if cell.hh1.is_none() || cell.epoch != *epoch {
                        cell.hh1 = Some(fast_instance(epsilon, domain, seed, c, *epoch));
                        cell.epoch = *epoch;
                        touched.push(c);
                    }
                    cell.hh1
                        .as_mut()
                        .expect("instance installed above")
                        .update(item);
                }
            }
        }
    }

    /// Distinct candidates from every cell, before filtering.
    pub fn candidates(&self) -> Vec<u64> {
        let mut out: Vec<u64> = match &self.cells {
            Cells::Standard(cells) => cells.iter().filter_map(Hh2::query).collect(),
            Cells::Fast { epoch, cells, .. } => cells
                .iter()
                .flat_map(|c| {
                    let current = c
                        .hh1
                        .as_ref()
                        .filter(|_| c.epoch == *epoch)
                        .and_then(Hh1::query);
                    c.retained.into_iter().chain(current)
                })
                .collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Threshold `(3 eps / 4) * sqrt(F2_hat)` applied to candidate estimates.
    pub fn threshold(&self) -> f64 {
        0.75 * self.config.epsilon * self.aux.f2_estimate().sqrt()
    }

    /// Candidates whose auxiliary estimate clears [`BpTree::threshold`],
    /// sorted by estimate descending, ties by item ascending.
    pub fn query(&mut self) -> Vec<(u64, i64)> {
        let threshold = self.threshold();
        let mut out: Vec<(u64, i64)> = self
            .candidates()
            .into_iter()
            .map(|i| (i, self.aux.estimate(i)))
            .filter(|&(_, est)| est as f64 >= threshold)
            .collect();
        out.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Versioned binary snapshot: header and configuration, the counters
    /// (auxiliary table row-major, then tracker tables), then the remaining
    /// per-cell state and seeds.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.bytes(MAGIC);
        e.u16(VERSION);
        encode_config(&mut e, &self.config);
        e.u64(self.len);

        let mut counters: Vec<i64> = self.aux.table().to_vec();
        match &self.cells {
            Cells::Standard(cells) => {
                for h in cells {
                    counters.extend(h.tracker.counters());
                }
            }
            Cells::Fast { tracker, .. } => counters.extend(tracker.counters()),
        }
        e.u64(counters.len() as u64);
        for c in counters {
            e.i64(c);
        }

        match &self.cells {
            Cells::Standard(cells) => {
                for h in cells {
                    e.u64(h.tracker.len());
                    e.u64(h.k as u64);
                    e.u64(h.generations);
                    e.u64(h.starts[0]);
                    e.u64(h.starts[1]);
                    e.u64(h.len);
                    e.hh1(&h.current);
                    match &h.previous {
                        Some(p) => {
                            e.u8(1);
                            e.hh1(p);
                        }
                        None => e.u8(0),
                    }
                }
            }
            Cells::Fast {
                tracker,
                epoch,
                cells,
                touched,
            } => {
                e.u64(tracker.seed());
                e.u64(tracker.len());
                e.u64(*epoch);
                for c in cells {
                    e.u64(c.epoch);
                    e.opt_u64(c.retained);
                    match &c.hh1 {
                        Some(h) => {
                            e.u8(1);
                            e.hh1(h);
                        }
                        None => e.u8(0),
                    }
                }
                e.u64(touched.len() as u64);
                for &t in touched {
                    e.u64(t as u64);
                }
            }
        }
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut d = Decoder::new(bytes);
        if d.take(4).map_err(|_| SnapshotError::BadMagic)? != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let version = d.u16()?;
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let at = d.offset();
        let config = decode_config(&mut d)?;
        let mut sketch = Self::new(config).map_err(|e| SnapshotError::Corrupt {
            offset: at,
            reason: e.to_string(),
        })?;
        sketch.len = d.u64()?;

        let at = d.offset();
        let total = d.usize()?;
        let aux_len = sketch.aux.table().len();
        let tracker_len = config.tracker.counters();
        let expected = aux_len
            + match &sketch.cells {
                Cells::Standard(cells) => cells.len() * tracker_len,
                Cells::Fast { .. } => tracker_len,
            };
        if total != expected {
            return Err(SnapshotError::Corrupt {
                offset: at,
                reason: format!("expected {expected} counters, found {total}"),
            });
        }
        let aux_table = d.i64s(aux_len)?;
        sketch
            .aux
            .restore(&aux_table, None)
            .map_err(|e| d.corrupt(e.to_string()))?;

        let domain = config.domain;
        match &mut sketch.cells {
            Cells::Standard(cells) => {
                let tables: Vec<Vec<i64>> = (0..cells.len())
                    .map(|_| d.i64s(tracker_len))
                    .collect::<Result<_, _>>()?;
                for (h, table) in cells.iter_mut().zip(tables) {
                    let tracker_len = d.u64()?;
                    h.tracker
                        .restore(&table, tracker_len)
                        .map_err(|e| d.corrupt(e.to_string()))?;
                    h.k =
                        u32::try_from(d.u64()?).map_err(|_| d.corrupt("exponent out of range"))?;
                    h.generations = d.u64()?;
                    h.starts = [d.u64()?, d.u64()?];
                    h.len = d.u64()?;
                    h.current = d.hh1(domain)?;
                    h.previous = if d.flag()? {
                        Some(d.hh1(domain)?)
                    } else {
                        None
                    };
                }
            }
            Cells::Fast {
                tracker,
                epoch,
                cells,
                touched,
            } => {
                let table = d.i64s(tracker_len)?;
                let tracker_seed = d.u64()?;
                let tracker_len = d.u64()?;
                tracker.reset(tracker_seed);
                tracker
                    .restore(&table, tracker_len)
                    .map_err(|e| d.corrupt(e.to_string()))?;
                *epoch = d.u64()?;
                for c in cells.iter_mut() {
                    c.epoch = d.u64()?;
                    c.retained = d.opt_u64()?;
                    c.hh1 = if d.flag()? {
                        Some(d.hh1(domain)?)
                    } else {
                        None
                    };
                }
                let n = d.usize()?;
                if n > cells.len() {
                    return Err(d.corrupt("touched list longer than the grid"));
                }
                for _ in 0..n {
                    let c = d.usize()?;
                    if c >= cells.len() {
                        return Err(d.corrupt(format!("cell index {c} out of range")));
                    }
                    touched.push(c);
                }
            }
        }
        d.finish()?;
        Ok(sketch)
    }
}

fn fast_sigma(epsilon: f64, epoch: u64) -> f64 {
    epsilon / 16.0 * 2f64.powf(epoch as f64 / 2.0)
}

fn fast_instance(epsilon: f64, domain: u64, seed: u64, cell: usize, epoch: u64) -> Hh1 {
    let cell_seed = seed::derive(seed, tag::BP_CELL, cell as u64);
    Hh1::new(
        fast_sigma(epsilon, epoch),
        domain,
        seed::derive(cell_seed, tag::BP_EPOCH, epoch),
    )
    .expect("domain validated at construction")
}

/// Keep `retained` unless `found` has a strictly larger auxiliary estimate.
fn better(aux: &mut CountSketch, retained: Option<u64>, found: Option<u64>) -> Option<u64> {
    match (retained, found) {
        (Some(old), Some(new)) if old != new => {
            if aux.estimate(old) < aux.estimate(new) {
                Some(new)
            } else {
                Some(old)
            }
        }
        (None, found) => found,
        (old, _) => old,
    }
}

fn encode_config(e: &mut Encoder, c: &BpTreeConfig) {
    e.f64(c.epsilon);
    e.f64(c.delta);
    e.u64(c.domain);
    e.u64(c.resolved_buckets() as u64);
    e.u64(c.resolved_rows() as u64);
    e.u8(match c.mode {
        BpTreeMode::Standard => 0,
        BpTreeMode::Fast => 1,
    });
    e.f64(c.heaviness);
    e.u8(match c.tracker.mode {
        TrackerMode::Median => 0,
        TrackerMode::EightWise => 1,
    });
    e.u64(c.tracker.rows as u64);
    e.u64(c.tracker.buckets as u64);
    e.f64(c.tracker.epsilon);
    e.f64(c.tracker.delta);
    e.u64(c.seed);
}

fn decode_config(d: &mut Decoder) -> Result<BpTreeConfig, SnapshotError> {
    let epsilon = d.f64()?;
    let delta = d.f64()?;
    let domain = d.u64()?;
    let buckets = d.usize()?;
    let rows = d.usize()?;
    let mode = match d.u8()? {
        0 => BpTreeMode::Standard,
        1 => BpTreeMode::Fast,
        other => return Err(d.corrupt(format!("unknown mode {other}"))),
    };
    let heaviness = d.f64()?;
    let tracker_mode = match d.u8()? {
        0 => TrackerMode::Median,
        1 => TrackerMode::EightWise,
        other => return Err(d.corrupt(format!("unknown tracker mode {other}"))),
    };
    let tracker = TrackerConfig {
        mode: tracker_mode,
        rows: d.usize()?,
        buckets: d.usize()?,
        epsilon: d.f64()?,
        delta: d.f64()?,
    };
    let seed = d.u64()?;
    // Guard against absurd allocations before building the grid.
    let cells = rows.checked_mul(buckets).filter(|&c| c <= 1 << 32);
    if cells.is_none()
        || tracker
            .rows
            .checked_mul(tracker.buckets)
            .is_none_or(|c| c > 1 << 32)
    {
        return Err(d.corrupt("dimensions too large"));
    }
    Ok(BpTreeConfig {
        epsilon,
        delta,
        domain,
        buckets: Some(buckets),
        rows: Some(rows),
        mode,
        heaviness,
        tracker,
        seed,
    })
}

impl StateSize for BpTree {
    fn state_bytes(&self) -> usize {
        let routing = self.rows * 2 * WORD_BYTES;
        let cells = match &self.cells {
            Cells::Standard(cells) => cells.iter().map(StateSize::state_bytes).sum(),
            Cells::Fast {
                tracker,
                cells,
                touched,
                ..
            } => {
                // Per cell: epoch, retained candidate and a full instance.
                let instance = cells
                    .iter()
                    .find_map(|c| c.hh1.as_ref())
                    .map_or(0, StateSize::state_bytes);
                tracker.state_bytes()
                    + WORD_BYTES
                    + cells.len() * (2 * WORD_BYTES + instance)
                    + touched.capacity() * WORD_BYTES
            }
        };
        self.aux.state_bytes() + routing + cells + WORD_BYTES
    }
}
