//! HH2 success rate as a function of the heavy item's multiplier `alpha`.

use bptree_core::seed::{derive, tag};
use bptree_core::{Hh2, StreamKind, StreamSpec, HEAVY_ITEM};
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{display, display_all, Emit, Report};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct HeavinessConfig {
    pub n: u64,
    pub alphas: Vec<f64>,
    #[serde(serialize_with = "display_all")]
    pub kinds: Vec<StreamKind>,
    pub trials: usize,
}

impl Default for HeavinessConfig {
    fn default() -> Self {
        Self {
            n: 1_000_000,
            alphas: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            kinds: StreamKind::ALL.to_vec(),
            trials: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HeavinessRecord {
    pub alpha: f64,
    #[serde(serialize_with = "display")]
    pub kind: StreamKind,
    pub trial: usize,
    pub success: bool,
    pub generations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeavinessPoint {
    pub alpha: f64,
    #[serde(serialize_with = "display")]
    pub kind: StreamKind,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
}

pub type HeavinessReport = Report<HeavinessConfig, HeavinessRecord, HeavinessPoint>;

impl HeavinessReport {
    pub fn rate(&self, alpha: f64, kind: StreamKind) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|p| p.alpha == alpha && p.kind == kind)
            .map(|p| p.rate)
    }
}

impl Emit for HeavinessReport {
    type Row = HeavinessPoint;

    fn csv_rows(&self) -> &[HeavinessPoint] {
        &self.aggregates
    }

    fn summary(&self) -> String {
        let mut out = format!(
            "HH2 success rate, n = {}, {} trials per point\n",
            self.config.n, self.config.trials
        );
        out.push_str(&format!("{:>8}", "alpha"));
        for k in &self.config.kinds {
            out.push_str(&format!("{:>8}", k.name()));
        }
        out.push('\n');
        for &a in &self.config.alphas {
            out.push_str(&format!("{a:>8}"));
            for &k in &self.config.kinds {
                out.push_str(&format!(
                    "{:>8.2}",
                    self.rate(a, k).expect("every point is reported")
                ));
            }
            out.push('\n');
        }
        out
    }
}

pub fn heaviness(config: &HeavinessConfig, seed: u64) -> Result<HeavinessReport, CliError> {
    if config.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    if config.alphas.is_empty() || config.kinds.is_empty() {
        return Err(CliError::Config(
            "alpha and kind lists must be nonempty".into(),
        ));
    }
    let points: Vec<(f64, StreamKind)> = config
        .alphas
        .iter()
        .flat_map(|&a| config.kinds.iter().map(move |&k| (a, k)))
        .collect();
    for &(a, k) in &points {
        StreamSpec::new(config.n, a, k, 0)?;
    }
    let trials = config.trials;
    let records: Vec<HeavinessRecord> = (0..points.len() * trials)
        .into_par_iter()
        .map(|job| {
            let (p, trial) = (job / trials, job % trials);
            let (alpha, kind) = points[p];
            let stream_seed = derive(
                derive(seed, tag::STREAM, p as u64),
                tag::TRIAL,
                trial as u64,
            );
            let sketch_seed = derive(derive(seed, tag::TRIAL, p as u64), tag::TRIAL, trial as u64);
            let spec =
                StreamSpec::new(config.n, alpha, kind, stream_seed).expect("validated above");
            let mut h = Hh2::new(config.n + 1, sketch_seed).expect("domain is nonempty");
            for i in spec.iter() {
                h.update(i);
            }
            HeavinessRecord {
                alpha,
                kind,
                trial,
                success: h.query() == Some(HEAVY_ITEM),
                generations: h.generations(),
            }
        })
        .collect();
    let aggregates = points
        .iter()
        .zip(records.chunks(trials))
        .map(|(&(alpha, kind), chunk)| {
            let successes = chunk.iter().filter(|r| r.success).count();
            HeavinessPoint {
                alpha,
                kind,
                successes,
                trials,
                rate: successes as f64 / trials as f64,
            }
        })
        .collect();
    Ok(Report {
        experiment: "heaviness",
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
    fn one_point_per_alpha_and_kind() {
        let c = HeavinessConfig {
            n: 1000,
            alphas: vec![1.0, 64.0],
            kinds: vec![StreamKind::Start, StreamKind::Random],
            trials: 4,
        };
        let r = heaviness(&c, 3).unwrap();
        assert_eq!(r.aggregates.len(), 4);
        assert_eq!(r.records.len(), 16);
        assert_eq!(r.rate(64.0, StreamKind::Start), Some(1.0));
        assert!(r.summary().contains("random"));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = HeavinessConfig {
            n: 10,
            trials: 1,
            ..Default::default()
        };
        assert!(heaviness(
            &HeavinessConfig {
                trials: 0,
                ..base.clone()
            },
            1
        )
        .is_err());
        assert!(heaviness(
            &HeavinessConfig {
                alphas: vec![],
                ..base.clone()
            },
            1
        )
        .is_err());
        assert!(heaviness(
            &HeavinessConfig {
                alphas: vec![-1.0],
                ..base
            },
            1
        )
        .is_err());
    }
}
