//! Seeded hash primitives.
//!
//! Every random choice made by the sketch (element sampling, id compression,
//! Poisson copy counts, bucket placement) is a pure function of a [`HashSeed`]
//! and the input, so two runs with the same seeds produce identical state.
//!
//! The default backend is a keyed 64-bit mixer ([`HashFunction::Mixer`]).
//! Polynomial k-wise independent families ([`KWiseFamily`]) are available as
//! an alternative backend when limited independence is the point of an
//! experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The Mersenne prime 2^61 - 1, the default modulus for polynomial families.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Opaque entropy source for a hash function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HashSeed(pub u64);

impl HashSeed {
    /// Derives an independent child seed; `stream` selects which child.
    pub fn derive(self, stream: u64) -> HashSeed {
        HashSeed(mix64(self.0 ^ mix64(stream.wrapping_add(0x6A09_E667_F3BC_C909))))
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed 64-bit hash of `x`.
#[inline]
pub fn hash_u64(seed: HashSeed, x: u64) -> u64 {
    let key = mix64(seed.0);
    mix64(mix64(x ^ key).wrapping_add(key.rotate_left(29)))
}

/// Keyed hash of a byte string, used to map text tokens onto element ids.
pub fn hash_bytes(seed: HashSeed, bytes: &[u8]) -> u64 {
    let mut acc = hash_u64(seed, bytes.len() as u64);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        acc = hash_u64(seed, acc ^ u64::from_le_bytes(word));
    }
    acc
}

/// Maps a 64-bit hash onto `[0, range)` by multiply-shift.
#[inline]
pub fn reduce(h: u64, range: u64) -> u64 {
    ((h as u128 * range as u128) >> 64) as u64
}

/// Top 53 bits of `h` as a uniform real in `[0, 1)`.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// 1-based index of the lowest set bit; 65 for zero.
#[inline]
pub fn lsb_level(v: u64) -> u32 {
    if v == 0 {
        65
    } else {
        v.trailing_zeros() + 1
    }
}

/// Inverse-transform draw from Poisson(1): the smallest `j` with `CDF(j) > u`.
pub fn poisson_unit_draw(u: f64) -> u32 {
    debug_assert!((0.0..1.0).contains(&u));
    let mut pmf = (-1.0f64).exp();
    let mut cdf = pmf;
    let mut j = 0u32;
    // The CDF reaches 1.0 in binary64 well before j = 25.
    while cdf <= u && j < 64 {
        j += 1;
        pmf /= j as f64;
        cdf += pmf;
    }
    j
}

/// Polynomial hash family `(sum_j c_j x^j mod p) mod range`.
///
/// With coefficients drawn uniformly from the field this family is k-wise
/// independent over `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseFamily {
    modulus: u64,
    coefficients: Vec<u64>,
    range: u64,
}

impl KWiseFamily {
    pub fn new(coefficients: Vec<u64>, modulus: u64, range: u64) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "polynomial family needs degree k >= 2, got {}",
                coefficients.len()
            )));
        }
        if modulus < 2 {
            return Err(Error::InvalidConfig(format!("modulus {modulus} is not a prime")));
        }
        if range == 0 {
            return Err(Error::InvalidConfig("hash range must be positive".into()));
        }
        if let Some(c) = coefficients.iter().find(|&&c| c >= modulus) {
            return Err(Error::InvalidConfig(format!(
                "coefficient {c} outside field [0, {modulus})"
            )));
        }
        Ok(Self {
            modulus,
            coefficients,
            range,
        })
    }

    /// Draws a family of degree `k` over `GF(2^61 - 1)` from `seed`.
    pub fn random(k: usize, range: u64, seed: HashSeed) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
        let coefficients = (0..k).map(|_| rng.gen_range(0..MERSENNE_61)).collect();
        Self::new(coefficients, MERSENNE_61, range)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    /// Evaluates the polynomial at `x` by Horner's rule.
    pub fn eval(&self, x: u64) -> Result<u64> {
        if x >= self.modulus {
            return Err(Error::HashDomain {
                value: x,
                modulus: self.modulus,
            });
        }
        Ok(self.field_eval(x) % self.range)
    }

    fn field_eval(&self, x: u64) -> u64 {
        let p = self.modulus as u128;
        let x = x as u128;
        self.coefficients
            .iter()
            .rev()
            .fold(0u128, |acc, &c| (acc * x + c as u128) % p) as u64
    }
}

/// A single hash function `u64 -> u64` from one of the two backends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HashFunction {
    Mixer(HashSeed),
    /// Inputs are reduced modulo the field prime before evaluation.
    Polynomial(KWiseFamily),
}

impl HashFunction {
    pub fn new(backend: HashBackend, seed: HashSeed) -> Self {
        match backend {
            HashBackend::Mixer => HashFunction::Mixer(seed),
            HashBackend::Polynomial { degree } => HashFunction::Polynomial(
                KWiseFamily::random(degree.max(2), MERSENNE_61, seed)
                    .expect("degree clamped to >= 2 and range is positive"),
            ),
        }
    }

    /// Raw hash value. Mixer outputs span 64 bits; polynomial outputs span
    /// `[0, 2^61 - 1)`.
    #[inline]
    pub fn raw(&self, x: u64) -> u64 {
        match self {
            HashFunction::Mixer(seed) => hash_u64(*seed, x),
            HashFunction::Polynomial(f) => f.field_eval(x % f.modulus),
        }
    }

    /// Hash value in `[0, range)`.
    #[inline]
    pub fn bounded(&self, x: u64, range: u64) -> u64 {
        match self {
            HashFunction::Mixer(seed) => reduce(hash_u64(*seed, x), range),
            HashFunction::Polynomial(f) => f.field_eval(x % f.modulus) % range,
        }
    }

    /// Hash value as a uniform real in `[0, 1)`.
    #[inline]
    pub fn unit(&self, x: u64) -> f64 {
        match self {
            HashFunction::Mixer(seed) => unit_interval(hash_u64(*seed, x)),
            HashFunction::Polynomial(f) => f.field_eval(x % f.modulus) as f64 / f.modulus as f64,
        }
    }

    /// Sampling level of `x`: [`lsb_level`] of the raw hash.
    #[inline]
    pub fn level(&self, x: u64) -> u32 {
        lsb_level(self.raw(x))
    }
}

/// Which family backs the sketch's hash functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashBackend {
    #[default]
    Mixer,
    Polynomial { degree: usize },
}
