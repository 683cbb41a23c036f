//! Streaming l2 heavy hitters in constant memory.
//!
//! The crate is organised bottom-up:
//!
//! * [`hashing`] - seeded k-wise independent families and big-endian label utilities.
//! * [`f2_tracker`] - second-moment estimators that stay accurate at every point of the stream.
//! * [`hh1`] - the round-based learner that recovers one heavy item given a guess of `sqrt(F2)`.
//! * [`hh2`] - removes the guess by restarting [`hh1::Hh1`] whenever the tracked `F2` doubles.
//! * [`countsketch`] - the classic baseline, also used as the auxiliary estimator.
//! * [`bptree`] - the bucketed reduction from `eps`-heavy hitters to a single heavy hitter.
//! * [`streams`] - deterministic synthetic workloads and stream files.
//! * [`oracle`] - exact statistics and Monte-Carlo verifiers used by tests and the CLI.
//!
//! All randomness is derived from explicit 64-bit seeds (see [`seed`]), so every run
//! is reproducible bit for bit.

pub mod bptree;
pub mod countsketch;
pub mod error;
pub mod f2_tracker;
pub mod hashing;
pub mod hh1;
pub mod hh2;
pub mod oracle;
pub mod seed;
mod snapshot;
pub mod streams;

pub use bptree::{BpTree, BpTreeConfig, BpTreeMode};
pub use countsketch::{CountSketch, CountSketchConfig};
pub use error::{SketchError, SnapshotError, StreamError};
pub use f2_tracker::{F2Tracker, TrackerConfig, TrackerMode};
pub use hh1::Hh1;
pub use hh2::Hh2;
pub use oracle::ExactStats;
pub use streams::{StreamKind, StreamSpec, HEAVY_ITEM};

/// Number of bytes in a machine word, used by the state-size accounting.
pub const WORD_BYTES: usize = 8;

/// Size of a sketch's state computed from its layout (counters plus seeds),
/// independent of allocator behaviour.
pub trait StateSize {
    fn state_bytes(&self) -> usize;
}
