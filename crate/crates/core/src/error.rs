use std::path::PathBuf;

use thiserror::Error;

/// Configuration and runtime errors raised by the sketches.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("epsilon must lie in {range}, got {value}")]
    InvalidEpsilon { value: f64, range: &'static str },
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("{0} must be at least 1")]
    ZeroDimension(&'static str),
    #[error("domain size must be at least 1")]
    EmptyDomain,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Counters are 64-bit; a stream long enough to push one past 2^62 is rejected.
    #[error("counter overflow: stream exceeded 2^62 updates")]
    CounterOverflow,
}

/// Errors decoding a serialized sketch.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u16),
    #[error("snapshot truncated at byte {0}")]
    Truncated(usize),
    #[error("corrupt snapshot at byte {offset}: {reason}")]
    Corrupt { offset: usize, reason: String },
}

/// Errors reading a stream file.
#[derive(Debug, Error)]
pub enum StreamError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at byte offset {offset}: {reason}")]
    Malformed { offset: u64, reason: String },
}
