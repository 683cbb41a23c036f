//! Synthetic workloads with one planted heavy item, plus stream files.
//!
//! A stream with parameters `(n, alpha)` contains the heavy item
//! [`HEAVY_ITEM`] `ceil(alpha * sqrt(n))` times and each of the light items
//! `1..=n` once. The [`StreamKind`] decides where the heavy occurrences go;
//! light items always appear in ascending order.
//!
//! Files are either raw little-endian `u64` records or decimal text, one item
//! per line.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{SketchError, StreamError};
use crate::seed::{self, tag};

pub const HEAVY_ITEM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    /// Every heavy occurrence precedes the light items.
    Start,
    /// Every heavy occurrence follows the light items.
    End,
    /// Heavy occurrences at uniformly random positions.
    Random,
    /// Heavy occurrences in runs of `ceil(n^(1/4))` at random positions.
    Blocks,
}

impl StreamKind {
    pub const ALL: [StreamKind; 4] = [Self::Start, Self::End, Self::Random, Self::Blocks];

    pub fn name(self) -> &'static str {
        match self {
            Self::Start => "start",
            Self::End => "end",
            Self::Random => "random",
            Self::Blocks => "blocks",
        }
    }
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StreamKind {
    type Err = SketchError;

    /// Accepts the names and the type numbers `1..=4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "start" | "1" => Ok(Self::Start),
            "end" | "2" => Ok(Self::End),
            "random" | "3" => Ok(Self::Random),
            "blocks" | "4" => Ok(Self::Blocks),
            other => Err(SketchError::InvalidParameter(format!(
                "unknown stream kind {other:?}; expected start, end, random or blocks"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    pub n: u64,
    pub alpha: f64,
    pub kind: StreamKind,
    pub seed: u64,
}

impl StreamSpec {
    pub fn new(n: u64, alpha: f64, kind: StreamKind, seed: u64) -> Result<Self, SketchError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(SketchError::InvalidParameter(format!(
                "alpha must be finite and non-negative, got {alpha}"
            )));
        }
        Ok(Self {
            n,
            alpha,
            kind,
            seed,
        })
    }

    /// `ceil(alpha * sqrt(n))`.
    pub fn heavy_frequency(&self) -> u64 {
        (self.alpha * (self.n as f64).sqrt()).ceil() as u64
    }

    /// Stream length `n + ceil(alpha * sqrt(n))`.
    pub fn len(&self) -> u64 {
        self.n + self.heavy_frequency()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Run length `ceil(n^(1/4))` used by [`StreamKind::Blocks`].
    pub fn block_size(&self) -> u64 {
        ceil_fourth_root(self.n).max(1)
    }

    /// Exact `F2 = n + f_H^2`.
    pub fn f2(&self) -> u128 {
        let f = self.heavy_frequency() as u128;
        self.n as u128 + f * f
    }

    pub fn iter(&self) -> StreamIter {
        let f = self.heavy_frequency();
        let (units, run, last_run) = match self.kind {
            StreamKind::Blocks if f > 0 => {
                let bs = self.block_size();
                let blocks = f.div_ceil(bs);
                (blocks, bs, f - (blocks - 1) * bs)
            }
            _ => (f, 1, 1),
        };
        StreamIter {
            kind: self.kind,
            rng: seed::rng(seed::derive(self.seed, tag::STREAM, 0)),
            next_light: 1,
            light_left: self.n,
            units_left: units,
            run,
            last_run,
            in_run: 0,
            remaining: self.len(),
        }
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }
}

impl IntoIterator for &StreamSpec {
    type Item = u64;
    type IntoIter = StreamIter;

    fn into_iter(self) -> StreamIter {
        self.iter()
    }
}

/// Lazy generator; `O(1)` memory regardless of stream length.
///
/// Heavy runs are placed by sequential selection: before each light item
/// the next unit is a heavy run with probability
/// `runs_left / (runs_left + light_left)`, which makes every interleaving of
/// runs and light items equally likely.
#[derive(Debug, Clone)]
pub struct StreamIter {
    kind: StreamKind,
    rng: ChaCha8Rng,
    next_light: u64,
    light_left: u64,
    units_left: u64,
    run: u64,
    last_run: u64,
    in_run: u64,
    remaining: u64,
}

impl StreamIter {
    fn light(&mut self) -> u64 {
        let i = self.next_light;
        self.next_light += 1;
        self.light_left -= 1;
        i
    }

    fn start_run(&mut self) -> u64 {
        self.units_left -= 1;
        self.in_run = if self.units_left == 0 {
            self.last_run
        } else {
            self.run
        } - 1;
        HEAVY_ITEM
    }
}

impl Iterator for StreamIter {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        if self.in_run > 0 {
            self.in_run -= 1;
            return Some(HEAVY_ITEM);
        }
        let heavy_next = match self.kind {
            _ if self.units_left == 0 => false,
            _ if self.light_left == 0 => true,
            StreamKind::Start => true,
            StreamKind::End => false,
            StreamKind::Random | StreamKind::Blocks => {
                self.rng.random_range(0..self.units_left + self.light_left) < self.units_left
            }
        };
        Some(if heavy_next {
            self.start_run()
        } else {
            self.light()
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

impl ExactSizeIterator for StreamIter {}

/// Items `0..heavy.len()` with the given frequencies and `n_light` singletons
/// `heavy.len()..heavy.len() + n_light`, uniformly shuffled.
pub fn planted_stream(heavy: &[u64], n_light: u64, seed: u64) -> Vec<u64> {
    let k = heavy.len() as u64;
    let mut out: Vec<u64> = heavy
        .iter()
        .enumerate()
        .flat_map(|(i, &f)| std::iter::repeat_n(i as u64, f as usize))
        .chain(k..k + n_light)
        .collect();
    out.shuffle(&mut seed::rng(seed::derive(seed, tag::STREAM, 1)));
    out
}

fn ceil_fourth_root(n: u64) -> u64 {
    let mut r = (n as f64).powf(0.25).round() as u64;
    while r > 0 && (r - 1).checked_pow(4).is_some_and(|v| v >= n) {
        r -= 1;
    }
    while r.checked_pow(4).is_some_and(|v| v < n) {
        r += 1;
    }
    r
}

fn io_error(path: &Path, source: std::io::Error) -> StreamError {
    StreamError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parse little-endian `u64` records; a short final record is an error at its start offset.
pub fn read_binary_from<R: Read>(mut reader: R) -> Result<Vec<u64>, std::io::Error> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let chunks = bytes.chunks_exact(8);
    if !chunks.remainder().is_empty() {
        let offset = bytes.len() - chunks.remainder().len();
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            MalformedAt(
                offset as u64,
                format!("truncated record ({} of 8 bytes)", chunks.remainder().len()),
            ),
        ));
    }
    Ok(chunks
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[derive(Debug)]
struct MalformedAt(u64, String);

impl fmt::Display for MalformedAt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "byte {}: {}", self.0, self.1)
    }
}

impl std::error::Error for MalformedAt {}

fn classify(path: &Path, e: std::io::Error) -> StreamError {
    match e
        .get_ref()
        .and_then(|inner| inner.downcast_ref::<MalformedAt>())
    {
        Some(MalformedAt(offset, reason)) => StreamError::Malformed {
            offset: *offset,
            reason: reason.clone(),
        },
        None => io_error(path, e),
    }
}

/// One decimal item per line; blank lines are skipped.
pub fn read_text_from<R: BufRead>(reader: R) -> Result<Vec<u64>, std::io::Error> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in reader.split(b'\n') {
        let line = line?;
        let len = line.len() as u64 + 1;
        let text = std::str::from_utf8(&line).unwrap_or("\u{fffd}").trim();
        if !text.is_empty() {
            let item = text.parse::<u64>().map_err(|e| {
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    MalformedAt(offset, format!("{text:?}: {e}")),
                )
            })?;
            out.push(item);
        }
        offset += len;
    }
    Ok(out)
}

pub fn read_binary(path: &Path) -> Result<Vec<u64>, StreamError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_binary_from(BufReader::new(file)).map_err(|e| classify(path, e))
}

pub fn read_text(path: &Path) -> Result<Vec<u64>, StreamError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_text_from(BufReader::new(file)).map_err(|e| classify(path, e))
}

pub fn write_binary<I: IntoIterator<Item = u64>>(path: &Path, items: I) -> Result<(), StreamError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    for i in items {
        w.write_all(&i.to_le_bytes())
            .map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_text<I: IntoIterator<Item = u64>>(path: &Path, items: I) -> Result<(), StreamError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    for i in items {
        writeln!(w, "{i}").map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}
