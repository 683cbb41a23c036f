//! Exact ground truth and Monte-Carlo verifiers.
//!
//! Everything here stores the whole frequency vector; it is test and
//! benchmark scaffolding, not a sketch.

use std::collections::HashMap;

use crate::hashing::{prefix_match, Field, KWiseHash, PairwiseHash, SignFamily};
use crate::seed::{self, tag};

/// Constant in the bound `E sup_t |<f(t), Z>| < 23 ||f||_2` for 4-wise signs.
pub const CHAINING_CONSTANT: f64 = 23.0;

/// Heaviness under which a single HH1 run is guaranteed to succeed with probability 2/3.
pub const HH1_HEAVINESS_CONSTANT: f64 = 380_000.0;

/// Exact frequencies and moments of a stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactStats {
    freq: HashMap<u64, u64>,
    f2: u128,
    len: u64,
    snapshots: Vec<(u64, u128)>,
}

impl ExactStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_stream<I: IntoIterator<Item = u64>>(stream: I) -> Self {
        let mut s = Self::new();
        for i in stream {
            s.push(i);
        }
        s
    }

    /// Like [`ExactStats::from_stream`], also recording `F2` after each of the
    /// given prefix lengths.
    pub fn with_snapshots<I: IntoIterator<Item = u64>>(stream: I, times: &[u64]) -> Self {
        let mut times: Vec<u64> = times.to_vec();
        times.sort_unstable();
        let mut s = Self::new();
        let mut next = times.iter().peekable();
        while next.next_if(|&&t| t == 0).is_some() {
            s.snapshots.push((0, 0));
        }
        for i in stream {
            s.push(i);
            while next.next_if(|&&t| t == s.len).is_some() {
                s.snapshots.push((s.len, s.f2));
            }
        }
        s
    }

    /// Add one occurrence of `item`; returns the new `F2`.
    pub fn push(&mut self, item: u64) -> u128 {
        let f = self.freq.entry(item).or_insert(0);
        self.f2 += 2 * *f as u128 + 1;
        *f += 1;
        self.len += 1;
        self.f2
    }

    pub fn frequency(&self, item: u64) -> u64 {
        self.freq.get(&item).copied().unwrap_or(0)
    }

    pub fn frequencies(&self) -> &HashMap<u64, u64> {
        &self.freq
    }

    pub fn f2(&self) -> u128 {
        self.f2
    }

    pub fn f0(&self) -> usize {
        self.freq.len()
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `(prefix length, F2)` pairs recorded by [`ExactStats::with_snapshots`].
    pub fn snapshots(&self) -> &[(u64, u128)] {
        &self.snapshots
    }

    /// True iff `f_i^2 >= eps^2 (F2 - f_i^2)`; an item with all of the mass is heavy.
    pub fn is_heavy(&self, item: u64, eps: f64) -> bool {
        let f = self.frequency(item) as u128;
        if f == 0 {
            return false;
        }
        let rest = self.f2 - f * f;
        rest == 0 || (f * f) as f64 >= eps * eps * rest as f64
    }

    /// Every heavy item, ascending.
    pub fn heavy_set(&self, eps: f64) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .freq
            .keys()
            .copied()
            .filter(|&i| self.is_heavy(i, eps))
            .collect();
        out.sort_unstable();
        out
    }

    /// Heaviness `f_i / sqrt(F2 - f_i^2)`; infinite when `item` carries all of the mass.
    pub fn heaviness(&self, item: u64) -> f64 {
        let f = self.frequency(item) as u128;
        let rest = self.f2 - f * f;
        if rest == 0 {
            if f > 0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            f as f64 / (rest as f64).sqrt()
        }
    }

    /// `||f_tail(k)||_2`: the norm after zeroing the `k` largest counts.
    pub fn tail_norm(&self, k: usize) -> f64 {
        let mut counts: Vec<u64> = self.freq.values().copied().collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        let tail: u128 = counts.iter().skip(k).map(|&c| c as u128 * c as u128).sum();
        (tail as f64).sqrt()
    }
}

/// `sup_t |<f(t), Z>| / ||f||_2` for one sign vector.
pub fn sup_ratio<F: Field>(stream: &[u64], signs: &SignFamily<F>) -> f64 {
    let mut stats = ExactStats::new();
    let mut sum = 0i64;
    let mut sup = 0i64;
    for &i in stream {
        stats.push(i);
        sum += signs.eval(i);
        sup = sup.max(sum.abs());
    }
    if stats.f2() == 0 {
        return 0.0;
    }
    sup as f64 / (stats.f2() as f64).sqrt()
}

/// Mean of [`sup_ratio`] over `trials` independent sign families of the given degree.
pub fn sup_process_estimate(stream: &[u64], trials: usize, degree: usize, seed: u64) -> f64 {
    let total: f64 = (0..trials as u64)
        .map(|t| {
            let signs = SignFamily::seeded(degree, seed::derive(seed, tag::SUP_TRIAL, t))
                .expect("degree in 1..=8");
            sup_ratio(stream, &signs)
        })
        .sum();
    total / trials.max(1) as f64
}

/// `E sup_t |<f(t), Z>| / ||f||_2` under fully independent signs, by
/// enumerating all sign assignments of the distinct items (at most 20).
pub fn exact_sup_expectation(stream: &[u64]) -> f64 {
    let mut ids: Vec<u64> = stream.to_vec();
    ids.sort_unstable();
    ids.dedup();
    assert!(ids.len() <= 20, "too many distinct items to enumerate");
    let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let positions: Vec<usize> = stream.iter().map(|i| index[i]).collect();
    let norm = (ExactStats::from_stream(stream.iter().copied()).f2() as f64).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let assignments = 1u64 << ids.len();
    let total: i64 = (0..assignments)
        .map(|mask| {
            let mut sum = 0i64;
            let mut sup = 0i64;
            for &k in &positions {
                sum += if mask >> k & 1 == 1 { -1 } else { 1 };
                sup = sup.max(sum.abs());
            }
            sup
        })
        .sum();
    total as f64 / assignments as f64 / norm
}

/// Every polynomial of the given degree over a small field, one per seed.
pub fn enumerate_family<F: Field>(field: F, degree: usize) -> impl Iterator<Item = KWiseHash<F>> {
    let q = field.order();
    let count = q
        .checked_pow(degree as u32)
        .expect("family too large to enumerate");
    (0..count).map(move |mut s| {
        let coeffs: Vec<u64> = (0..degree)
            .map(|_| {
                let c = s % q;
                s /= q;
                c
            })
            .collect();
        KWiseHash::from_coeffs(field, &coeffs).expect("coefficients are field elements")
    })
}

/// True iff, over every member of the family, the hash values at `points`
/// take each of the `q^k` possible tuples equally often.
pub fn is_exactly_uniform<F: Field>(field: F, degree: usize, points: &[u64]) -> bool {
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut members = 0u64;
    for hash in enumerate_family(field, degree) {
        *counts
            .entry(points.iter().map(|&x| hash.eval(x)).collect())
            .or_default() += 1;
        members += 1;
    }
    let cells = field.order().pow(points.len() as u32);
    counts.len() as u64 == cells && counts.values().all(|&c| c * cells == members)
}

/// `E prod_{x in points} Z_x` exactly over every member of a sign family.
pub fn family_sign_moment<F: Field>(field: F, degree: usize, points: &[u64]) -> f64 {
    let (mut total, mut count) = (0i64, 0i64);
    for hash in enumerate_family(field, degree) {
        let signs = SignFamily::new(hash);
        total += points.iter().map(|&x| signs.eval(x)).product::<i64>();
        count += 1;
    }
    total as f64 / count as f64
}

/// `E <Z, x>^4` exactly over every member of a sign family.
pub fn family_fourth_moment<F: Field>(field: F, degree: usize, x: &[i64]) -> f64 {
    let (mut total, mut count) = (0f64, 0u64);
    for hash in enumerate_family(field, degree) {
        let signs = SignFamily::new(hash);
        let dot: i64 = x
            .iter()
            .enumerate()
            .map(|(i, &v)| signs.eval(i as u64) * v)
            .sum();
        total += (dot as f64).powi(4);
        count += 1;
    }
    total / count as f64
}

/// `E <Z, x>^4 = 3 ||x||^4 - 2 sum x_i^4` for independent Rademacher signs.
pub fn rademacher_fourth_moment(x: &[i64]) -> f64 {
    let s2: f64 = x.iter().map(|&v| (v * v) as f64).sum();
    let s4: f64 = x.iter().map(|&v| (v as f64).powi(4)).sum();
    3.0 * s2 * s2 - 2.0 * s4
}

/// Items other than `heavy` whose label agrees with `heavy`'s on the first `r` bits.
pub fn active_set(relabel: &PairwiseHash, heavy: u64, r: u32, items: &[u64]) -> Vec<u64> {
    active_by_prefix(relabel, relabel.eval(heavy), r, items)
        .into_iter()
        .filter(|&i| i != heavy)
        .collect()
}

/// Items whose label agrees with `prefix` on the first `r` bits.
pub fn active_by_prefix(relabel: &PairwiseHash, prefix: u64, r: u32, items: &[u64]) -> Vec<u64> {
    items
        .iter()
        .copied()
        .filter(|&i| prefix_match(relabel.eval(i), prefix, r, relabel.width()))
        .collect()
}

/// The partition `(active, inactive)` of `items` minus `heavy` after `r` learned bits.
pub fn active_sets(
    relabel: &PairwiseHash,
    heavy: u64,
    r: u32,
    items: &[u64],
) -> (Vec<u64>, Vec<u64>) {
    let active = active_set(relabel, heavy, r, items);
    let inactive = items
        .iter()
        .copied()
        .filter(|i| *i != heavy && !active.contains(i))
        .collect();
    (active, inactive)
}
