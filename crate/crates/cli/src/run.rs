//! One BPTree pass over a generated or recorded stream.

use std::path::PathBuf;

use bptree_core::oracle::ExactStats;
use bptree_core::seed::{derive, tag};
use bptree_core::streams;
use bptree_core::{BpTree, BpTreeConfig, BpTreeMode, StreamKind, StreamSpec};
use serde::{Serialize, Serializer};

use crate::error::io_context;
use crate::report::{display, Emit, Report};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum Source {
    Gen {
        n: u64,
        alpha: f64,
        #[serde(serialize_with = "display")]
        kind: StreamKind,
    },
    File {
        path: PathBuf,
        /// One decimal item per line instead of little-endian u64 records.
        text: bool,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub source: Source,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(serialize_with = "mode_name")]
    pub mode: BpTreeMode,
    pub oracle: bool,
    pub save_state: Option<PathBuf>,
    /// Resume from a saved sketch; its own parameters replace the ones above.
    pub load_state: Option<PathBuf>,
}

fn mode_name<S: Serializer>(m: &BpTreeMode, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match m {
        BpTreeMode::Standard => "standard",
        BpTreeMode::Fast => "fast",
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Listing {
    pub item: u64,
    pub estimate: i64,
    /// Exact frequency in this run's stream, with `--oracle`.
    pub frequency: Option<u64>,
    /// Whether the item is `eps/2`-heavy, with `--oracle`.
    pub heavy: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub updates: u64,
    pub total_updates: u64,
    pub candidates: usize,
    pub reported: usize,
    pub threshold: f64,
    pub state_bytes: usize,
    pub restarts: u64,
    /// `eps`-heavy items of this run's stream that were not reported, with `--oracle`.
    pub missed: Option<Vec<u64>>,
    pub false_positives: Option<usize>,
}

pub type RunReport = Report<RunConfig, Listing, RunSummary>;

impl Emit for RunReport {
    type Row = Listing;

    fn csv_rows(&self) -> &[Listing] {
        &self.records
    }

    fn summary(&self) -> String {
        let s = &self.aggregates[0];
        let mut out = format!(
            "{} updates, {} candidates, {} reported above {:.1}\n",
            s.updates, s.candidates, s.reported, s.threshold
        );
        for l in &self.records {
            out.push_str(&format!("  {:>20} ~{}", l.item, l.estimate));
            if let (Some(f), Some(h)) = (l.frequency, l.heavy) {
                out.push_str(&format!(
                    " (exact {f}, {})",
                    if h { "heavy" } else { "not heavy" }
                ));
            }
            out.push('\n');
        }
        if let Some(missed) = s.missed.as_ref().filter(|m| !m.is_empty()) {
            out.push_str(&format!("missed heavy items: {missed:?}\n"));
        }
        out
    }
}

fn load_stream(source: &Source, seed: u64) -> Result<(Vec<u64>, u64), CliError> {
    match source {
        Source::Gen { n, alpha, kind } => {
            let spec = StreamSpec::new(*n, *alpha, *kind, derive(seed, tag::STREAM, 0))?;
            Ok((spec.to_vec(), n + 1))
        }
        Source::File { path, text } => {
            let items = if *text {
                streams::read_text(path)?
            } else {
                streams::read_binary(path)?
            };
            let domain = items.iter().max().map_or(1, |&m| m.saturating_add(1));
            Ok((items, domain))
        }
    }
}

pub fn run(config: &RunConfig, seed: u64) -> Result<RunReport, CliError> {
    let (stream, domain) = load_stream(&config.source, seed)?;
    let mut bp = match &config.load_state {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| io_context("cannot read", path, e))?;
            BpTree::from_bytes(&bytes)?
        }
        None => BpTree::new(
            BpTreeConfig::new(
                config.epsilon,
                config.delta,
                domain,
                derive(seed, tag::TRIAL, 0),
            )
            .with_mode(config.mode),
        )?,
    };
    for &i in &stream {
        bp.update(i);
    }
    if let Some(path) = &config.save_state {
        std::fs::write(path, bp.to_bytes()).map_err(|e| io_context("cannot write", path, e))?;
    }

    let candidates = bp.candidates().len();
    let threshold = bp.threshold();
    let found = bp.query();
    let epsilon = bp.config().epsilon;
    let stats = config
        .oracle
        .then(|| ExactStats::from_stream(stream.iter().copied()));
    let records: Vec<Listing> = found
        .iter()
        .map(|&(item, estimate)| Listing {
            item,
            estimate,
            frequency: stats.as_ref().map(|s| s.frequency(item)),
            heavy: stats.as_ref().map(|s| s.is_heavy(item, epsilon / 2.0)),
        })
        .collect();
    let missed = stats.as_ref().map(|s| {
        s.heavy_set(epsilon)
            .into_iter()
            .filter(|i| !found.iter().any(|(f, _)| f == i))
            .collect()
    });
    let false_positives = stats
        .as_ref()
        .map(|_| records.iter().filter(|l| l.heavy == Some(false)).count());
    let summary = RunSummary {
        updates: stream.len() as u64,
        total_updates: bp.len(),
        candidates,
        reported: records.len(),
        threshold,
        state_bytes: bptree_core::StateSize::state_bytes(&bp),
        restarts: bp.restarts(),
        missed,
        false_positives,
    };
    Ok(Report {
        experiment: "run",
        seed,
        config: config.clone(),
        records,
        aggregates: vec![summary],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(n: u64, alpha: f64) -> RunConfig {
        RunConfig {
            source: Source::Gen {
                n,
                alpha,
                kind: StreamKind::Random,
            },
            epsilon: 0.5,
            delta: 0.1,
            mode: BpTreeMode::Standard,
            oracle: true,
            save_state: None,
            load_state: None,
        }
    }

    #[test]
    fn planted_item_is_a_true_positive() {
        let r = run(&gen(5000, 4.0), 1).unwrap();
        assert_eq!(r.records[0].item, 0);
        assert_eq!(r.records[0].heavy, Some(true));
        assert_eq!(r.aggregates[0].missed, Some(vec![]));
    }

    #[test]
    fn file_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        std::fs::write(&path, "1\n2\n1\n1\n").unwrap();
        let mut c = gen(1, 1.0);
        c.source = Source::File { path, text: true };
        c.epsilon = 1.0;
        let r = run(&c, 1).unwrap();
        assert_eq!(
            r.records.iter().map(|l| l.item).collect::<Vec<_>>(),
            vec![1]
        );
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let mut c = gen(1, 1.0);
        c.source = Source::File {
            path: "/nonexistent/stream.bin".into(),
            text: false,
        };
        assert_eq!(run(&c, 1).unwrap_err().exit_code(), 3);
        c.source = Source::Gen {
            n: 10,
            alpha: 1.0,
            kind: StreamKind::Start,
        };
        c.epsilon = 0.0;
        assert_eq!(run(&c, 1).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn save_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let state = dir.path().join("bp.state");
        let mut c = gen(2000, 8.0);
        c.save_state = Some(state.clone());
        run(&c, 2).unwrap();
        c.save_state = None;
        c.load_state = Some(state);
        let r = run(&c, 2).unwrap();
        assert_eq!(r.aggregates[0].total_updates, 2 * r.aggregates[0].updates);
        assert_eq!(r.records[0].item, 0);
    }
}
