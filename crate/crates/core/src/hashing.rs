//! Seeded k-wise independent hash families and big-endian label utilities.
//!
//! Two kinds of hashing are used throughout the crate:
//!
//! * [`PairwiseHash`] relabels items with the invertible affine map
//!   `h(i) = a0 + a1 * i mod p`. Labels are read as `R`-bit big-endian strings
//!   where `R = ceil(log2 p)`.
//! * [`KWiseHash`] evaluates a random polynomial with `k` coefficients over a
//!   finite field, giving a k-wise independent family. [`SignFamily`] and
//!   [`BucketHash`] derive Rademacher signs and bucket indices from it.
//!
//! Production code uses the Mersenne field `2^61 - 1`. The small prime and
//! binary extension fields exist so tests can enumerate every seed.

use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, RngCore};

use crate::error::SketchError;
use crate::seed;

/// Arithmetic over a finite field whose elements are encoded as `u64`.
pub trait Field: Copy + fmt::Debug + Send + Sync + 'static {
    /// Number of field elements.
    fn order(&self) -> u64;
    /// Map an item identifier onto a field element.
    fn embed(&self, x: u64) -> u64;
    fn add(&self, a: u64, b: u64) -> u64;
    fn mul(&self, a: u64, b: u64) -> u64;
}

/// The Mersenne prime `2^61 - 1`.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Prime field modulo `2^61 - 1` with shift-and-add reduction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Mersenne61;

impl Mersenne61 {
    #[inline(always)]
    fn fold(x: u64) -> u64 {
        if x >= MERSENNE_61 {
            x - MERSENNE_61
        } else {
            x
        }
    }
}

impl Field for Mersenne61 {
    #[inline(always)]
    fn order(&self) -> u64 {
        MERSENNE_61
    }

    #[inline(always)]
    fn embed(&self, x: u64) -> u64 {
        Self::fold((x & MERSENNE_61) + (x >> 61))
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        Self::fold(a + b)
    }

    #[inline(always)]
    fn mul(&self, a: u64, b: u64) -> u64 {
        let t = a as u128 * b as u128;
        // t < 2^122, so both halves are below 2^61 and their sum below 2^62 - 2.
        Self::fold((t as u64 & MERSENNE_61) + (t >> 61) as u64)
    }
}

/// Prime field of small order, for exhaustive enumeration in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, SketchError> {
        if !(2..1 << 32).contains(&q) || !is_prime(q) {
            return Err(SketchError::InvalidParameter(format!(
                "{q} is not a prime below 2^32"
            )));
        }
        Ok(Self { q })
    }
}

impl Field for PrimeField {
    fn order(&self) -> u64 {
        self.q
    }
    fn embed(&self, x: u64) -> u64 {
        x % self.q
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.q
    }
    fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }
}

/// The binary field `GF(2^m)` for `1 <= m <= 8`.
///
/// Every element is a uniformly distributed bit string when the element is,
/// so signs read from the low bit are exactly balanced. Odd prime fields can
/// not offer that, which is why exact-uniformity tests use this field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryField {
    bits: u32,
    modulus: u64,
}

impl BinaryField {
    pub fn new(bits: u32) -> Result<Self, SketchError> {
        // Irreducible polynomials, lowest weight for each degree.
        let modulus = match bits {
            1 => 0b11,
            2 => 0b111,
            3 => 0b1011,
            4 => 0b1_0011,
            5 => 0b10_0101,
            6 => 0b100_0011,
            7 => 0b1000_0011,
            8 => 0b1_0001_1011,
            _ => {
                return Err(SketchError::InvalidParameter(format!(
                    "GF(2^{bits}) unsupported; use 1..=8 bits"
                )))
            }
        };
        Ok(Self { bits, modulus })
    }
}

impl Field for BinaryField {
    fn order(&self) -> u64 {
        1 << self.bits
    }
    fn embed(&self, x: u64) -> u64 {
        x & (self.order() - 1)
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }
    fn mul(&self, mut a: u64, mut b: u64) -> u64 {
        let mut acc = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & self.order() != 0 {
                a ^= self.modulus;
            }
        }
        acc
    }
}

/// Largest supported independence degree.
pub const MAX_DEGREE: usize = 8;

/// A random polynomial with `degree` coefficients over `F`; k-wise independent for `k = degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseHash<F: Field = Mersenne61> {
    field: F,
    degree: usize,
    coeffs: [u64; MAX_DEGREE],
}

impl<F: Field> KWiseHash<F> {
    pub fn from_coeffs(field: F, coeffs: &[u64]) -> Result<Self, SketchError> {
        if coeffs.is_empty() || coeffs.len() > MAX_DEGREE {
            return Err(SketchError::InvalidParameter(format!(
                "independence degree must be in 1..={MAX_DEGREE}, got {}",
                coeffs.len()
            )));
        }
        if let Some(c) = coeffs.iter().find(|&&c| c >= field.order()) {
            return Err(SketchError::InvalidParameter(format!(
                "coefficient {c} outside the field"
            )));
        }
        let mut stored = [0; MAX_DEGREE];
        stored[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Self {
            field,
            degree: coeffs.len(),
            coeffs: stored,
        })
    }

    pub fn random<R: RngCore>(field: F, degree: usize, rng: &mut R) -> Result<Self, SketchError> {
        let coeffs: Vec<u64> = (0..degree.min(MAX_DEGREE + 1))
            .map(|_| rng.random_range(0..field.order()))
            .collect();
        Self::from_coeffs(field, &coeffs)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs[..self.degree]
    }

    pub fn field(&self) -> F {
        self.field
    }

    /// Horner evaluation at the field image of `x`.
    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        let f = self.field;
        let x = f.embed(x);
        let mut acc = self.coeffs[self.degree - 1];
        for &c in self.coeffs[..self.degree - 1].iter().rev() {
            acc = f.add(f.mul(acc, x), c);
        }
        acc
    }
}

impl KWiseHash<Mersenne61> {
    pub fn seeded(degree: usize, seed: u64) -> Result<Self, SketchError> {
        Self::random(Mersenne61, degree, &mut seed::rng(seed))
    }
}

/// Rademacher signs `Z_i = (-1)^{h(i) mod 2}` from a k-wise independent polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignFamily<F: Field = Mersenne61> {
    hash: KWiseHash<F>,
}

impl<F: Field> SignFamily<F> {
    pub fn new(hash: KWiseHash<F>) -> Self {
        Self { hash }
    }

    pub fn degree(&self) -> usize {
        self.hash.degree()
    }

    pub fn hash(&self) -> &KWiseHash<F> {
        &self.hash
    }

    #[inline]
    pub fn eval(&self, i: u64) -> i64 {
        1 - 2 * (self.hash.eval(i) & 1) as i64
    }
}

impl SignFamily<Mersenne61> {
    pub fn seeded(degree: usize, seed: u64) -> Result<Self, SketchError> {
        KWiseHash::seeded(degree, seed).map(Self::new)
    }
}

/// Pairwise independent map `[n] -> [buckets]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketHash {
    hash: KWiseHash<Mersenne61>,
    buckets: u64,
}

impl BucketHash {
    pub fn seeded(buckets: usize, seed: u64) -> Result<Self, SketchError> {
        if buckets == 0 {
            return Err(SketchError::ZeroDimension("buckets"));
        }
        Ok(Self {
            hash: KWiseHash::seeded(2, seed)?,
            buckets: buckets as u64,
        })
    }

    pub fn buckets(&self) -> usize {
        self.buckets as usize
    }

    /// Multiply-shift range reduction of a uniform value in `[0, 2^61)`.
    #[inline]
    pub fn bucket(&self, i: u64) -> usize {
        ((self.hash.eval(i) as u128 * self.buckets as u128) >> 61) as usize
    }
}

/// Invertible pairwise independent relabeling `h(i) = a0 + a1 * i mod p`.
#[derive(Clone, PartialEq, Eq)]
pub struct PairwiseHash {
    p: u64,
    a0: u64,
    a1: u64,
    a1_inv: u64,
    width: u32,
}

impl fmt::Debug for PairwiseHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PairwiseHash({} + {} * i mod {}, R = {})",
            self.a0, self.a1, self.p, self.width
        )
    }
}

impl PairwiseHash {
    /// Explicit parameters; `p` must be prime and `a1` nonzero modulo `p`.
    pub fn from_parts(p: u64, a0: u64, a1: u64) -> Result<Self, SketchError> {
        if !is_prime(p) {
            return Err(SketchError::InvalidParameter(format!("{p} is not prime")));
        }
        if a0 >= p || a1 >= p || a1 == 0 {
            return Err(SketchError::InvalidParameter(format!(
                "need a0 in [0, {p}) and a1 in [1, {p})"
            )));
        }
        Ok(Self {
            p,
            a0,
            a1,
            a1_inv: mod_inverse(a1, p),
            width: ceil_log2(p),
        })
    }

    /// Draw `a0` uniform in `[0, p)` and `a1` uniform in `[1, p)`, re-drawing `a1` while it is zero.
    pub fn from_rng<R: RngCore>(p: u64, rng: &mut R) -> Result<Self, SketchError> {
        if !is_prime(p) {
            return Err(SketchError::InvalidParameter(format!("{p} is not prime")));
        }
        let a0 = rng.random_range(0..p);
        let mut a1 = rng.random_range(0..p);
        while a1 == 0 {
            a1 = rng.random_range(0..p);
        }
        Self::from_parts(p, a0, a1)
    }

    /// Relabeling for the domain `[n]`: `p` is the smallest prime at least
    /// `max(n + 1, n^2)`, so labels are invertible and collisions among the
    /// items of the domain have probability about `1/n`.
    pub fn for_domain(n: u64, seed: u64) -> Self {
        let n = n.clamp(1, (1 << 62) - 1);
        let target = n.saturating_mul(n).clamp(n + 1, 1 << 62);
        let p = next_prime(target);
        Self::from_rng(p, &mut seed::rng(seed)).expect("next_prime returns a prime")
    }

    /// Labels of exactly `width` bits: `p` is the largest prime below `2^width`.
    pub fn with_width(width: u32, seed: u64) -> Result<Self, SketchError> {
        let p = largest_prime_below_pow2(width)?;
        Self::from_rng(p, &mut seed::rng(seed))
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn coefficients(&self) -> (u64, u64) {
        (self.a0, self.a1)
    }

    pub fn inverse_coefficient(&self) -> u64 {
        self.a1_inv
    }

    /// Label bit-width `R = ceil(log2 p)`.
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn eval(&self, i: u64) -> u64 {
        ((self.a1 as u128 * i as u128 + self.a0 as u128) % self.p as u128) as u64
    }

    /// The unique `x` in `[0, p)` with `eval(x) == y`.
    pub fn invert(&self, y: u64) -> u64 {
        let p = self.p as u128;
        let shifted = (y as u128 % p + p - self.a0 as u128) % p;
        ((shifted * self.a1_inv as u128) % p) as u64
    }

    /// Preimage of `y` restricted to the domain `[n]`; `None` if it lies outside.
    pub fn invert_in_domain(&self, y: u64, n: u64) -> Option<u64> {
        if y >= self.p {
            return None;
        }
        Some(self.invert(y)).filter(|&x| x < n)
    }
}

/// `true` iff the `r` most significant bits of the `width`-bit labels `a` and `b` agree.
#[inline]
pub fn prefix_match(a: u64, b: u64, r: u32, width: u32) -> bool {
    debug_assert!(r <= width && width <= 64);
    r == 0 || (a ^ b) >> (width - r) == 0
}

/// The absolute-difference window `|a - b| < 2^(width - r)`.
///
/// Agreeing prefixes always fall inside the window, but the converse fails
/// across a carry boundary (`0111` vs `1000`), so this is only a necessary
/// condition; [`prefix_match`] is the exact test.
pub fn within_prefix_window(a: u64, b: u64, r: u32, width: u32) -> bool {
    debug_assert!(r <= width && width <= 64);
    (a.abs_diff(b) as u128) < 1u128 << (width - r)
}

/// Bit `r` (1-based, most significant first) of the `width`-bit label `a`.
#[inline]
pub fn label_bit(a: u64, r: u32, width: u32) -> u8 {
    debug_assert!(1 <= r && r <= width && width <= 64);
    ((a >> (width - r)) & 1) as u8
}

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    64 - (x.max(1) - 1).leading_zeros()
}

pub fn is_prime(x: u64) -> bool {
    primal_check::miller_rabin(x)
}

/// Smallest prime `>= x`. `x` must be below `2^63`.
pub fn next_prime(x: u64) -> u64 {
    assert!(x < 1 << 63, "next_prime argument too large");
    (x.max(2)..)
        .find(|&c| is_prime(c))
        .expect("primes are unbounded")
}

/// Largest prime in `[2^(width-1), 2^width)`, for `2 <= width <= 64`.
pub fn largest_prime_below_pow2(width: u32) -> Result<u64, SketchError> {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    if !(2..=64).contains(&width) {
        return Err(SketchError::InvalidParameter(format!(
            "label width must be in 2..=64, got {width}"
        )));
    }
    let table = TABLE.get_or_init(|| {
        (0..=64u32)
            .map(|w| {
                if w < 2 {
                    return 0;
                }
                let top = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
                (0..).map(|d| top - d).find(|&c| is_prime(c)).unwrap()
            })
            .collect()
    });
    Ok(table[width as usize])
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    t0.rem_euclid(p as i128) as u64
}
