//! Single heavy hitter without knowing `F2` in advance.
//!
//! An [`F2Tracker`] runs alongside the stream. Every time its estimate first
//! reaches a new power of two, a fresh [`Hh1`] is started with
//! `sigma = sqrt(estimate)`. Only the two most recent instances are kept; the
//! answer is the output of the older one.

use crate::error::SketchError;
use crate::f2_tracker::{F2Tracker, TrackerConfig};
use crate::hh1::Hh1;
use crate::seed::{self, tag};
use crate::{StateSize, WORD_BYTES};

/// Largest `k` with `2^k <= estimate`, or `None` below 1.
pub fn highest_crossed_exponent(estimate: f64) -> Option<u32> {
    if estimate.is_nan() || estimate < 1.0 {
        return None;
    }
    let mut k = estimate.log2().floor() as i32;
    while k > 0 && 2f64.powi(k) > estimate {
        k -= 1;
    }
    while 2f64.powi(k + 1) <= estimate {
        k += 1;
    }
    Some(k as u32)
}

#[derive(Debug, Clone)]
pub struct Hh2 {
    pub(crate) tracker: F2Tracker,
    pub(crate) n: u64,
    pub(crate) seed: u64,
    /// Highest power-of-two exponent crossed so far; latched.
    pub(crate) k: u32,
    /// Number of [`Hh1`] instances started, including the initial one.
    pub(crate) generations: u64,
    pub(crate) current: Hh1,
    pub(crate) previous: Option<Hh1>,
    /// Stream positions (0-based) at which `previous` and `current` started.
    pub(crate) starts: [u64; 2],
    pub(crate) len: u64,
}

impl Hh2 {
    /// Uses [`TrackerConfig::practical`].
    pub fn new(n: u64, seed: u64) -> Result<Self, SketchError> {
        Self::with_tracker(n, TrackerConfig::practical(), seed)
    }

    pub fn with_tracker(n: u64, tracker: TrackerConfig, seed: u64) -> Result<Self, SketchError> {
        if n == 0 {
            return Err(SketchError::EmptyDomain);
        }
        Ok(Self {
            tracker: F2Tracker::new(tracker, seed::derive(seed, tag::TRACKER, 0))?,
            n,
            seed,
            k: 0,
            generations: 1,
            current: Hh1::new(1.0, n, seed::derive(seed, tag::HH1_GENERATION, 0))?,
            previous: None,
            starts: [0, 0],
            len: 0,
        })
    }

    /// # Panics
    ///
    /// If the stream exceeds [`crate::f2_tracker::COUNTER_LIMIT`] updates.
    #[inline]
    pub fn update(&mut self, item: u64) {
        self.tracker
            .update(item)
            .expect("stream too long for 64-bit counters");
        let estimate = self.tracker.query();
        if estimate >= 2f64.powi(self.k as i32 + 1) {
            self.k = highest_crossed_exponent(estimate).expect("estimate is at least 2");
            let sigma = estimate.sqrt();
            let next = Hh1::new(
                sigma,
                self.n,
                seed::derive(self.seed, tag::HH1_GENERATION, self.generations),
            )
            .expect("domain validated at construction");
            self.generations += 1;
            self.previous = Some(std::mem::replace(&mut self.current, next));
            self.starts = [self.starts[1], self.len];
        }
        self.len += 1;
        self.current.update(item);
        if let Some(prev) = &mut self.previous {
            prev.update(item);
        }
    }

    /// The older live instance's answer; the only instance's answer before the first restart.
    pub fn query(&self) -> Option<u64> {
        match &self.previous {
            Some(prev) => prev.query(),
            None => self.current.query(),
        }
    }

    pub fn exponent(&self) -> u32 {
        self.k
    }

    pub fn generations(&self) -> u64 {
        self.generations
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tracker(&self) -> &F2Tracker {
        &self.tracker
    }

    pub fn current(&self) -> &Hh1 {
        &self.current
    }

    pub fn previous(&self) -> Option<&Hh1> {
        self.previous.as_ref()
    }

    /// Start positions of the live instances, oldest first.
    pub fn live_starts(&self) -> Vec<u64> {
        match self.previous {
            Some(_) => self.starts.to_vec(),
            None => vec![self.starts[1]],
        }
    }
}

impl StateSize for Hh2 {
    fn state_bytes(&self) -> usize {
        // n, k, generation counter, two start positions, length
        let own = 6 * WORD_BYTES;
        let instances = self.current.state_bytes()
            + self
                .previous
                .as_ref()
                .map_or(self.current.state_bytes(), |p| p.state_bytes());
        own + self.tracker.state_bytes() + instances
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossed_exponent_examples() {
        assert_eq!(highest_crossed_exponent(5.0), Some(2));
        assert_eq!(highest_crossed_exponent(4.0), Some(2));
        assert_eq!(highest_crossed_exponent(3.999), Some(1));
        assert_eq!(highest_crossed_exponent(1.0), Some(0));
        assert_eq!(highest_crossed_exponent(0.5), None);
        assert_eq!(highest_crossed_exponent(f64::NAN), None);
        for k in 0..100 {
            assert_eq!(highest_crossed_exponent(2f64.powi(k)), Some(k as u32));
        }
    }

    #[test]
    fn fresh_and_empty() {
        let h = Hh2::new(100, 1).unwrap();
        assert_eq!(h.query(), None);
        assert_eq!(h.exponent(), 0);
        assert_eq!(h.tracker().config(), &TrackerConfig::practical());
        assert!(Hh2::new(0, 1).is_err());
    }

    #[test]
    fn repeated_item() {
        for seed in 0..10 {
            let mut h = Hh2::new(1 << 30, seed).unwrap();
            for _ in 0..5000 {
                h.update(31337);
            }
            assert_eq!(h.query(), Some(31337));
            // The estimate is exactly t^2, so every exponent up to 2 log2(5000) was crossed.
            assert_eq!(h.exponent(), highest_crossed_exponent(25e6).unwrap());
        }
    }

    #[test]
    fn one_instance_per_crossing_and_two_live() {
        let mut h = Hh2::new(1000, 7).unwrap();
        let mut crossings = Vec::new();
        let mut last_k = 0;
        for t in 0..20_000u64 {
            h.update(t % 1000);
            assert!(h.exponent() >= last_k);
            if h.exponent() > last_k {
                crossings.push(t);
                last_k = h.exponent();
            }
            let live = h.live_starts();
            assert!(live.len() <= 2);
            // Live instances started at the two most recent crossings.
            let expect: Vec<u64> = std::iter::once(0)
                .chain(crossings.iter().copied())
                .rev()
                .take(2)
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            assert_eq!(live, expect);
        }
        assert_eq!(h.generations(), crossings.len() as u64 + 1);
    }

    #[test]
    fn new_instance_uses_estimate_at_crossing() {
        let mut h = Hh2::new(1 << 20, 3).unwrap();
        for _ in 0..3 {
            h.update(9);
        }
        // Estimates 1, 4, 9: crossings at 4 (k = 2) and 9 (k = 3).
        assert_eq!(h.exponent(), 3);
        assert_eq!(h.current().sigma(), 3.0);
        assert_eq!(h.previous().unwrap().sigma(), 2.0);
    }

    #[test]
    fn state_size_is_flat() {
        let mut h = Hh2::new(1_000_000, 1).unwrap();
        let before = h.state_bytes();
        for t in 0..100_000u64 {
            h.update(t % 777);
        }
        assert_eq!(h.state_bytes(), before);
    }
}
