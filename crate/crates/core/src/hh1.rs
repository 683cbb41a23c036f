//! Round-based recovery of a single heavy item given a guess `sigma` for `sqrt(F2)`.
//!
//! Items are relabeled with a pairwise independent hash into `R`-bit labels.
//! Round `r` learns bit `r` of the heavy item's label: every item whose label
//! agrees with the bits learned so far adds a random sign to the accumulator
//! selected by its own bit `r`. Once `|X0 + X1|` reaches `c * sigma * beta^r`
//! the larger accumulator in absolute value names the bit, fresh signs are
//! drawn and the next round starts. The answer is the last item that matched
//! the learned prefix.

use crate::error::SketchError;
use crate::hashing::{label_bit, prefix_match, PairwiseHash, SignFamily};
use crate::seed::{self, tag};
use crate::{StateSize, WORD_BYTES};

/// Threshold scale `c`.
pub const C: f64 = 1.0 / 32.0;
/// Per-round threshold decay `beta`.
pub const BETA: f64 = 0.75;
/// Labels never exceed one machine word.
pub const MAX_WIDTH: u32 = 64;

/// What a single update did to the state; used by white-box tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hh1Event {
    /// The label disagrees with the learned prefix.
    Ignored,
    /// The item matched and its sign went into accumulator `bit`.
    Counted { bit: u8 },
    /// The item matched and closed round `round`, which learned `bit`.
    RoundClosed { round: u32, bit: u8 },
    /// All rounds are done; the item matched the full learned prefix.
    Matched,
}

/// Label width `3 * floor(log2(min(n, sigma^2) + 1))`, capped at 64 and at least 2.
pub fn label_width(n: u64, sigma: f64) -> u32 {
    let s2 = sigma * sigma;
    let m = if s2 >= n as f64 { n } else { s2 as u64 };
    let bits = 63 - m.saturating_add(1).leading_zeros();
    (3 * bits).clamp(2, MAX_WIDTH)
}

#[derive(Debug, Clone)]
pub struct Hh1 {
    pub(crate) sigma: f64,
    pub(crate) n: u64,
    pub(crate) seed: u64,
    pub(crate) offset: i32,
    pub(crate) round: u32,
    pub(crate) prefix: u64,
    pub(crate) acc: [i64; 2],
    pub(crate) candidate: Option<u64>,
    width: u32,
    threshold: f64,
    relabel: PairwiseHash,
    signs: SignFamily,
}

impl Hh1 {
    /// `sigma` below 1 (including NaN) is clamped to 1.
    pub fn new(sigma: f64, n: u64, seed: u64) -> Result<Self, SketchError> {
        Self::with_threshold_offset(sigma, n, seed, 0)
    }

    /// Like [`Hh1::new`] with round `r` using threshold `c * sigma * beta^(r + offset)`.
    pub fn with_threshold_offset(
        sigma: f64,
        n: u64,
        seed: u64,
        offset: i32,
    ) -> Result<Self, SketchError> {
        if n == 0 {
            return Err(SketchError::EmptyDomain);
        }
        let sigma = if sigma >= 1.0 { sigma } else { 1.0 };
        let width = label_width(n, sigma);
        let relabel = PairwiseHash::with_width(width, seed::derive(seed, tag::RELABEL, 0))?;
        let mut h = Self {
            sigma,
            n,
            seed,
            offset,
            round: 1,
            prefix: 0,
            acc: [0; 2],
            candidate: None,
            width,
            threshold: 0.0,
            relabel,
            signs: round_signs(seed, 1),
        };
        h.threshold = h.threshold_for(1);
        Ok(h)
    }

    fn threshold_for(&self, round: u32) -> f64 {
        C * self.sigma * BETA.powi(round as i32 + self.offset)
    }

    #[inline]
    pub fn update(&mut self, item: u64) -> Hh1Event {
        let label = self.relabel.eval(item);
        if !prefix_match(label, self.prefix, self.round - 1, self.width) {
            return Hh1Event::Ignored;
        }
        self.candidate = Some(item);
        if self.round >= self.width {
            return Hh1Event::Matched;
        }
        let bit = label_bit(label, self.round, self.width);
        self.acc[bit as usize] += self.signs.eval(item);
        let [x0, x1] = self.acc;
        if ((x0 + x1).abs() as f64) < self.threshold {
            return Hh1Event::Counted { bit };
        }
        let learned = u8::from(x1.abs() > x0.abs());
        let closed = self.round;
        self.prefix |= (learned as u64) << (self.width - closed);
        self.round += 1;
        self.acc = [0; 2];
        self.signs = round_signs(self.seed, self.round);
        self.threshold = self.threshold_for(self.round);
        Hh1Event::RoundClosed {
            round: closed,
            bit: learned,
        }
    }

    /// The last item that matched the learned prefix.
    pub fn query(&self) -> Option<u64> {
        self.candidate
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn domain(&self) -> u64 {
        self.n
    }

    /// Label width `R`.
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Current round; rounds `1..round` are complete.
    pub fn round(&self) -> u32 {
        self.round
    }

    /// True once every round up to `R - 1` has closed.
    pub fn finished(&self) -> bool {
        self.round >= self.width
    }

    /// The learned bits, stored at their positions in an `R`-bit label.
    pub fn prefix(&self) -> u64 {
        self.prefix
    }

    pub fn learned_bits(&self) -> Vec<u8> {
        (1..self.round)
            .map(|r| label_bit(self.prefix, r, self.width))
            .collect()
    }

    pub fn accumulators(&self) -> [i64; 2] {
        self.acc
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn relabel(&self) -> &PairwiseHash {
        &self.relabel
    }

    pub fn signs(&self) -> &SignFamily {
        &self.signs
    }

    /// Rebuild the derived fields after the dynamic ones were overwritten.
    pub(crate) fn resync(&mut self) -> Result<(), SketchError> {
        if self.round == 0 || self.round > self.width {
            return Err(SketchError::InvalidParameter(format!(
                "round {} outside 1..={}",
                self.round, self.width
            )));
        }
        self.signs = round_signs(self.seed, self.round);
        self.threshold = self.threshold_for(self.round);
        Ok(())
    }
}

fn round_signs(seed: u64, round: u32) -> SignFamily {
    SignFamily::seeded(4, seed::derive(seed, tag::ROUND_SIGNS, round as u64))
        .expect("degree 4 is supported")
}

impl StateSize for Hh1 {
    fn state_bytes(&self) -> usize {
        // sigma, n, width, round, prefix, two accumulators, candidate,
        // threshold, relabel (p, a0, a1, a1^-1) and the round's sign coefficients
        (9 + 4 + self.signs.degree()) * WORD_BYTES
    }
}
