//! Distinct-element estimation with k-minimum-values sketches.
//!
//! [`KmvSketch`] provides the end-of-stream estimate `D̂`; [`TrackingDistinct`]
//! is a small sketch whose estimate is read after every update to drive the
//! sampling-level schedule.

use std::collections::BTreeSet;

use crate::hashing::{hash_u64, HashSeed};

/// Default constant `c` in the capacity `k = ceil(c / eps^2)`.
pub const KMV_CAPACITY_CONSTANT: f64 = 100.0;

/// Capacity of the tracking sketch.
pub const TRACKING_CAPACITY: usize = 64;

const HASH_RANGE: f64 = 18_446_744_073_709_551_616.0; // 2^64

/// Keeps the `k` smallest distinct hash values seen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmvSketch {
    capacity: usize,
    seed: HashSeed,
    minima: BTreeSet<u64>,
}

impl KmvSketch {
    pub fn new(capacity: usize, seed: HashSeed) -> Self {
        assert!(capacity >= 2, "KMV capacity must be at least 2");
        Self {
            capacity,
            seed,
            minima: BTreeSet::new(),
        }
    }

    /// Sketch whose relative standard error is about `eps / sqrt(c / 100)`.
    pub fn with_accuracy(eps: f64, c: f64, seed: HashSeed) -> Self {
        Self::new(((c / (eps * eps)).ceil() as usize).max(2), seed)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.minima.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minima.is_empty()
    }

    /// Stored hash values in increasing order.
    pub fn minima(&self) -> impl Iterator<Item = u64> + '_ {
        self.minima.iter().copied()
    }

    pub fn update(&mut self, x: u64) {
        self.insert_hash(hash_u64(self.seed, x));
    }

    fn insert_hash(&mut self, h: u64) {
        if self.minima.len() < self.capacity {
            self.minima.insert(h);
            return;
        }
        let largest = *self.minima.last().expect("sketch at capacity is nonempty");
        if h < largest && self.minima.insert(h) {
            self.minima.pop_last();
        }
    }

    /// Exact count below capacity, otherwise `(k - 1) / v_k` with `v_k` the
    /// k-th smallest hash as a fraction of the hash range.
    pub fn estimate(&self) -> f64 {
        if self.minima.len() < self.capacity {
            return self.minima.len() as f64;
        }
        let kth = *self.minima.last().expect("sketch at capacity is nonempty");
        (self.capacity as f64 - 1.0) * HASH_RANGE / (kth as f64 + 1.0)
    }

    pub fn size_bytes(&self) -> usize {
        self.minima.len() * std::mem::size_of::<u64>()
    }
}

/// Constant-factor distinct estimate readable at every stream prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackingDistinct {
    inner: KmvSketch,
}

impl TrackingDistinct {
    pub fn new(seed: HashSeed) -> Self {
        Self {
            inner: KmvSketch::new(TRACKING_CAPACITY, seed),
        }
    }

    pub fn update(&mut self, x: u64) {
        self.inner.update(x);
    }

    pub fn estimate(&self) -> f64 {
        self.inner.estimate()
    }

    pub fn size_bytes(&self) -> usize {
        self.inner.size_bytes()
    }
}
