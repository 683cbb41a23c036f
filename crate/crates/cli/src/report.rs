use std::fmt::Display;

use serde::{Serialize, Serializer};

use crate::CliError;

/// Configuration echo, per-trial records and aggregates of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Report<C, R, A> {
    pub experiment: &'static str,
    pub seed: u64,
    pub config: C,
    pub records: Vec<R>,
    pub aggregates: Vec<A>,
}

pub trait Emit: Serialize {
    type Row: Serialize;

    /// The rows written in CSV mode.
    fn csv_rows(&self) -> &[Self::Row];

    /// A few lines for a person reading the terminal.
    fn summary(&self) -> String;

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.csv_rows() {
            w.serialize(row)
                .map_err(|e| CliError::Io(format!("csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Io(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub(crate) fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub(crate) fn display_all<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}
