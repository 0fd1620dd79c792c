//! Deterministic per-query uniforms and Efraimidis–Spirakis order keys.
//!
//! Every random number in this crate comes from hashing, never from an RNG:
//! the digest input is `seed bytes, 0x1F, query bytes` (with an extra
//! `0x1F "refresh"` suffix for [`refresh_hash`]), the digest is MD5, and the
//! first 8 digest bytes, big-endian, map to `(h + 0.5) / 2^64`. That keeps
//! the construction reproducible bit-for-bit across implementations.
//!
//! Order keys are stored in the log domain as `ln(u)/w`, which orders
//! identically to `u^(1/w)` but keeps full precision at web-scale weights
//! where direct powering saturates toward 1.

use std::cmp::Ordering;
use std::fmt;

use md5::{Digest, Md5};

use crate::error::Error;

const FIELD_SEPARATOR: u8 = 0x1f;
const REFRESH_DOMAIN: &[u8] = b"refresh";
const TWO_POW_64: f64 = 18446744073709551616.0;
/// Largest f64 strictly below 1.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Opaque non-empty seed string, as fed to the hash functions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Seed(String);

impl Seed {
    pub fn new(value: impl Into<String>) -> Result<Self, Error> {
        let value = value.into();
        if value.is_empty() {
            return Err(Error::EmptySeed);
        }
        Ok(Seed(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A uniform random number strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitUniform(f64);

impl UnitUniform {
    pub fn new(value: f64) -> Result<Self, Error> {
        if value > 0.0 && value < 1.0 {
            Ok(UnitUniform(value))
        } else {
            Err(Error::UniformOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Impression count used as the sampling weight. Zero means "not in this
/// period's population" and is rejected wherever a key would be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(u64);

impl Weight {
    pub const fn new(value: u64) -> Self {
        Weight(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Order key stored as `ln(u)/w`; larger is better. Always finite and
/// negative, so a total order over keys is well defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderKey(f64);

impl OrderKey {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl Eq for OrderKey {}

impl PartialOrd for OrderKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn digest_uniform(seed: &Seed, query: &str, refresh: bool) -> UnitUniform {
    let mut hasher = Md5::new();
    hasher.update(seed.as_str().as_bytes());
    hasher.update([FIELD_SEPARATOR]);
    hasher.update(query.as_bytes());
    if refresh {
        hasher.update([FIELD_SEPARATOR]);
        hasher.update(REFRESH_DOMAIN);
    }
    let digest = hasher.finalize();
    let h = u64::from_be_bytes(digest[..8].try_into().expect("md5 digest is 16 bytes"));
    // (h + 0.5) / 2^64 lands in the open interval; the min() guards the one
    // rounding case (h within 2^10 of 2^64) that would otherwise hit 1.0.
    let u = ((h as f64) + 0.5) / TWO_POW_64;
    UnitUniform(u.min(ONE_BELOW))
}

/// The per-query uniform used for order keys.
pub fn sample_hash(seed: &Seed, query: &str) -> UnitUniform {
    digest_uniform(seed, query, false)
}

/// The independent uniform that decides whether a query keeps its previous
/// sample-hash generation or moves to the next one.
pub fn refresh_hash(seed: &Seed, query: &str) -> UnitUniform {
    digest_uniform(seed, query, true)
}

/// Efraimidis–Spirakis order key: orders identically to `u^(1/w)`.
pub fn es_order_key(u: UnitUniform, w: Weight) -> Result<OrderKey, Error> {
    if w.is_zero() {
        return Err(Error::ZeroWeight);
    }
    Ok(OrderKey(u.value().ln() / w.value() as f64))
}

/// Reproducible seed for a given period: `namespace ":" period_index`.
/// Injective in `period_index` for a fixed namespace.
pub fn new_seed(period_index: u64, namespace: &str) -> Seed {
    Seed(format!("{namespace}:{period_index}"))
}
