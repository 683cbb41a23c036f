//! Maximum F2 tracking error over a grid of tracker dimensions.
//!
//! The error of one run is `max_t |F2_hat(t) - F2(t)| / F2(m)`, with `F2(m)`
//! the value at the end of the stream. All cells see the same streams.

use bptree_core::f2_tracker::{F2Tracker, TrackerConfig};
use bptree_core::oracle::ExactStats;
use bptree_core::seed::{derive, tag};
use bptree_core::{StreamKind, StreamSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{display, mean, Emit, Report};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct TrackErrorConfig {
    pub n: u64,
    pub alpha: f64,
    #[serde(serialize_with = "display")]
    pub kind: StreamKind,
    pub buckets: Vec<usize>,
    pub rows: Vec<usize>,
    pub trials: usize,
}

impl Default for TrackErrorConfig {
    fn default() -> Self {
        Self {
            n: 100_000,
            alpha: 1.0,
            kind: StreamKind::Random,
            buckets: vec![1, 10, 100, 1000],
            rows: vec![1, 2, 4, 8, 16],
            trials: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackRecord {
    pub trial: usize,
    pub buckets: usize,
    pub rows: usize,
    pub max_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackCell {
    pub buckets: usize,
    pub rows: usize,
    pub avg_max_error: f64,
    pub worst_max_error: f64,
}

pub type TrackErrorReport = Report<TrackErrorConfig, TrackRecord, TrackCell>;

impl TrackErrorReport {
    pub fn cell(&self, buckets: usize, rows: usize) -> Option<&TrackCell> {
        self.aggregates
            .iter()
            .find(|c| c.buckets == buckets && c.rows == rows)
    }
}

impl Emit for TrackErrorReport {
    type Row = TrackCell;

    fn csv_rows(&self) -> &[TrackCell] {
        &self.aggregates
    }

    fn summary(&self) -> String {
        let mut out = format!(
            "avg / worst max F2 tracking error over {} streams\n",
            self.config.trials
        );
        out.push_str(&format!("{:>6}", "b\\r"));
        for r in &self.config.rows {
            out.push_str(&format!("{r:>16}"));
        }
        out.push('\n');
        for &b in &self.config.buckets {
            out.push_str(&format!("{b:>6}"));
            for &r in &self.config.rows {
                let c = self.cell(b, r).expect("every cell is reported");
                out.push_str(&format!(
                    "{:>16}",
                    format!("{:.3} / {:.3}", c.avg_max_error, c.worst_max_error)
                ));
            }
            out.push('\n');
        }
        out
    }
}

pub fn track_error(config: &TrackErrorConfig, seed: u64) -> Result<TrackErrorReport, CliError> {
    if config.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    if config.buckets.is_empty() || config.rows.is_empty() {
        return Err(CliError::Config(
            "bucket and row lists must be nonempty".into(),
        ));
    }
    let cells: Vec<TrackerConfig> = config
        .buckets
        .iter()
        .flat_map(|&b| {
            config
                .rows
                .iter()
                .map(move |&r| TrackerConfig::explicit(r, b))
        })
        .collect::<Result<_, _>>()?;
    let specs: Vec<StreamSpec> = (0..config.trials as u64)
        .map(|t| {
            StreamSpec::new(
                config.n,
                config.alpha,
                config.kind,
                derive(seed, tag::STREAM, t),
            )
        })
        .collect::<Result<_, _>>()?;

    let per_trial: Vec<Vec<TrackRecord>> = specs
        .par_iter()
        .enumerate()
        .map(|(trial, spec)| {
            let stream = spec.to_vec();
            let mut exact = ExactStats::new();
            let truth: Vec<f64> = stream.iter().map(|&i| exact.push(i) as f64).collect();
            let end = exact.f2() as f64;
            let trial_seed = derive(seed, tag::TRIAL, trial as u64);
            cells
                .iter()
                .enumerate()
                .map(|(c, &cell)| {
                    let mut tracker =
                        F2Tracker::new(cell, derive(trial_seed, tag::TRACKER, c as u64))
                            .expect("dimensions validated above");
                    let mut worst = 0f64;
                    for (&i, &f2) in stream.iter().zip(&truth) {
                        tracker.update(i).expect("stream fits 64-bit counters");
                        worst = worst.max((tracker.query() - f2).abs());
                    }
                    TrackRecord {
                        trial,
                        buckets: cell.buckets,
                        rows: cell.rows,
                        max_error: worst / end,
                    }
                })
                .collect()
        })
        .collect();
    let records: Vec<TrackRecord> = per_trial.into_iter().flatten().collect();

    let aggregates = cells
        .iter()
        .map(|cell| {
            let errors: Vec<f64> = records
                .iter()
                .filter(|r| r.buckets == cell.buckets && r.rows == cell.rows)
                .map(|r| r.max_error)
                .collect();
            TrackCell {
                buckets: cell.buckets,
                rows: cell.rows,
                avg_max_error: mean(&errors),
                worst_max_error: errors.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(Report {
        experiment: "track-error",
        seed,
        config: config.clone(),
        records,
        aggregates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_grids() {
        let mut c = TrackErrorConfig {
            n: 100,
            trials: 0,
            ..Default::default()
        };
        assert!(matches!(track_error(&c, 1), Err(CliError::Config(_))));
        c.trials = 1;
        c.rows.clear();
        assert!(track_error(&c, 1).is_err());
        c.rows = vec![0];
        assert!(track_error(&c, 1).is_err());
    }

    #[test]
    fn small_grid() {
        let c = TrackErrorConfig {
            n: 2000,
            buckets: vec![1, 100],
            rows: vec![1, 5],
            trials: 3,
            ..Default::default()
        };
        let r = track_error(&c, 7).unwrap();
        assert_eq!(r.records.len(), 12);
        assert_eq!(r.aggregates.len(), 4);
        assert!(r.cell(100, 5).unwrap().avg_max_error < r.cell(1, 1).unwrap().avg_max_error);
    }
}
