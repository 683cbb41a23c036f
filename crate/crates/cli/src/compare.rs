//! Update rate and state size of HH2 against the CountSketch baseline.
//!
//! Timing runs on the calling thread. Each measurement feeds a tenth of the
//! stream to a throwaway sketch, then feeds the whole stream to a fresh one
//! in five timed windows and reports the median window rate.

use std::hint::black_box;
use std::time::Instant;

use bptree_core::countsketch::{CountSketch, CountSketchConfig};
use bptree_core::seed::{derive, tag};
use bptree_core::{Hh2, StateSize, StreamKind, StreamSpec, HEAVY_ITEM};
use serde::Serialize;

use crate::report::{display, median, Emit, Report};
use crate::CliError;

const WINDOWS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct CompareConfig {
    pub ns: Vec<u64>,
    pub alpha: f64,
    #[serde(serialize_with = "display")]
    pub kind: StreamKind,
    pub trials: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            ns: vec![100_000, 1_000_000, 10_000_000],
            alpha: 64.0,
            kind: StreamKind::Random,
            trials: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sketch {
    Hh2,
    CountSketch,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRecord {
    pub n: u64,
    pub trial: usize,
    pub sketch: Sketch,
    pub found: bool,
    pub state_bytes: usize,
    pub updates_per_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub n: u64,
    pub sketch: Sketch,
    pub successes: usize,
    pub state_bytes: usize,
    pub updates_per_ms: f64,
}

pub type CompareReport = Report<CompareConfig, CompareRecord, CompareRow>;

impl CompareReport {
    pub fn row(&self, n: u64, sketch: Sketch) -> Option<&CompareRow> {
        self.aggregates
            .iter()
            .find(|r| r.n == n && r.sketch == sketch)
    }
}

impl Emit for CompareReport {
    type Row = CompareRow;

    fn csv_rows(&self) -> &[CompareRow] {
        &self.aggregates
    }

    fn summary(&self) -> String {
        let mut out = format!(
            "{:>12} {:>12} {:>14} {:>10} {:>8}\n",
            "n", "sketch", "updates/ms", "bytes", "found"
        );
        for r in &self.aggregates {
            let name = match r.sketch {
                Sketch::Hh2 => "hh2",
                Sketch::CountSketch => "countsketch",
            };
            out.push_str(&format!(
                "{:>12} {:>12} {:>14.0} {:>10} {:>5}/{}\n",
                r.n, name, r.updates_per_ms, r.state_bytes, r.successes, self.config.trials
            ));
        }
        out
    }
}

/// Median updates/ms over the timed windows, and the sketch after the full stream.
pub fn measure<S>(
    stream: &[u64],
    mut build: impl FnMut() -> S,
    mut update: impl FnMut(&mut S, u64),
) -> (f64, S) {
    let mut warm = build();
    for &i in &stream[..stream.len() / 10] {
        update(&mut warm, i);
    }
    black_box(&warm);
    let mut sketch = build();
    let window = stream.len().div_ceil(WINDOWS).max(1);
    let rates: Vec<f64> = stream
        .chunks(window)
        .map(|chunk| {
            let start = Instant::now();
            for &i in chunk {
                update(&mut sketch, black_box(i));
            }
            let ms = start.elapsed().as_secs_f64() * 1e3;
            chunk.len() as f64 / ms.max(1e-9)
        })
        .collect();
    (median(&rates), sketch)
}

pub fn compare(config: &CompareConfig, seed: u64) -> Result<CompareReport, CliError> {
    if config.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    if config.ns.is_empty() {
        return Err(CliError::Config(
            "the list of n values must be nonempty".into(),
        ));
    }
    let mut records = Vec::new();
    for (p, &n) in config.ns.iter().enumerate() {
        for trial in 0..config.trials {
            let job = derive(seed, tag::TRIAL, p as u64);
            let spec = StreamSpec::new(
                n,
                config.alpha,
                config.kind,
                derive(job, tag::STREAM, trial as u64),
            )?;
            let stream = spec.to_vec();
            let sketch_seed = derive(job, tag::TRIAL, trial as u64);

            let (rate, h) = measure(
                &stream,
                || Hh2::new(n + 1, sketch_seed).expect("n + 1 >= 1"),
                Hh2::update,
            );
            records.push(CompareRecord {
                n,
                trial,
                sketch: Sketch::Hh2,
                found: h.query() == Some(HEAVY_ITEM),
                state_bytes: h.state_bytes(),
                updates_per_ms: rate,
            });

            let cs_config = CountSketchConfig::baseline(n);
            let (rate, cs) = measure(
                &stream,
                || {
                    CountSketch::new(cs_config, sketch_seed)
                        .expect("baseline dimensions are positive")
                },
                CountSketch::update,
            );
            records.push(CompareRecord {
                n,
                trial,
                sketch: Sketch::CountSketch,
                found: cs.top_candidate() == Some(HEAVY_ITEM),
                state_bytes: cs.state_bytes(),
                updates_per_ms: rate,
            });
        }
    }
    let mut aggregates = Vec::new();
    for &n in &config.ns {
        for sketch in [Sketch::Hh2, Sketch::CountSketch] {
            let rs: Vec<&CompareRecord> = records
                .iter()
                .filter(|r| r.n == n && r.sketch == sketch)
                .collect();
            let rates: Vec<f64> = rs.iter().map(|r| r.updates_per_ms).collect();
            aggregates.push(CompareRow {
                n,
                sketch,
                successes: rs.iter().filter(|r| r.found).count(),
                state_bytes: rs.iter().map(|r| r.state_bytes).max().unwrap_or(0),
                updates_per_ms: median(&rates),
            });
        }
    }
    Ok(Report {
        experiment: "compare",
        seed,
        config: config.clone(),
        records,
        aggregates,
    })
}
