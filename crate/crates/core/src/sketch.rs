//! The streaming half of the profile sketch.
//!
//! Each arriving element is hashed to a sampling level; elements whose level
//! reaches the current level are replicated a Poisson(1) number of times into
//! a table of `B` buckets. Every bucket holds one `(level, counter)` entry
//! per relative sampling level. When the distinct-count (type D) or stream
//! length (type M) outgrows the table, the current level advances, every
//! stored level shifts down by one, and entries that fall below zero are
//! dropped.

use crate::distinct::{KmvSketch, TrackingDistinct, KMV_CAPACITY_CONSTANT};
use crate::error::{Error, Result};
use crate::hashing::{poisson_unit_draw, HashBackend, HashFunction, HashSeed};

/// Highest level the sketch will advance to; past this every hash has been
/// exhausted.
const MAX_LEVEL: u32 = 64;

/// Which additive guarantee the sketch is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorType {
    /// Head error `sum_{i <= tau} |phi_i - est_i| <= eps * D`.
    D,
    /// Total error `sum_i |phi_i - est_i| <= eps * m`.
    M,
}

impl std::fmt::Display for ErrorType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorType::D => "D",
            ErrorType::M => "m",
        })
    }
}

impl std::str::FromStr for ErrorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(ErrorType::D),
            "M" | "m" => Ok(ErrorType::M),
            other => Err(Error::InvalidConfig(format!("unknown error type {other:?}"))),
        }
    }
}

/// Numerator of the type-D bucket count `ceil(C / eps^2)`.
pub const DISTINCT_BUCKET_CONSTANT: f64 = 64.0;

/// Bucket count for the requested guarantee.
pub fn default_buckets(epsilon: f64, error_type: ErrorType) -> usize {
    let eps2 = epsilon * epsilon;
    match error_type {
        ErrorType::D => (DISTINCT_BUCKET_CONSTANT / eps2).ceil() as usize,
        ErrorType::M => (4.0 * (2.0 + 1.0 / epsilon).ln() / eps2).ceil() as usize,
    }
}

/// Frequency threshold used for the type-M guarantee.
pub fn default_tau_m(epsilon: f64) -> usize {
    (2.0 / epsilon).ceil() as usize
}

/// Default sampling constant `K`. The sampled set size settles in
/// `(B / K, 2B / K]`, so `K = 16` keeps it at most `B / 8`.
pub const DEFAULT_SAMPLING_CONSTANT: f64 = 16.0;

/// All tuning constants of a [`ProfileSketch`].
#[derive(Debug, Clone, PartialEq)]
pub struct SketchConfig {
    pub epsilon: f64,
    pub error_type: ErrorType,
    /// Number of buckets `B`.
    pub buckets: usize,
    /// Frequency threshold `tau`; counters saturate at `tau + 1`.
    pub tau: usize,
    /// Cap `H` on Poisson copies per element.
    pub max_copies: usize,
    /// Size `T` of the compressed id domain.
    pub id_domain: u64,
    /// Sampling constant `K`.
    pub sampling_constant: f64,
    /// Upper bound `n` on the element domain (type-M level cap).
    pub domain_size: u64,
    /// Constant `c` of the end-of-stream distinct sketch, `k = ceil(c / eps^2)`.
    pub distinct_constant: f64,
    pub backend: HashBackend,
    /// Pins the sampling level and disables advancement.
    pub fixed_level: Option<u32>,
    pub seed: HashSeed,
}

impl SketchConfig {
    /// Configuration for the `eps * D` head guarantee over frequencies `1..=tau`.
    pub fn error_d(epsilon: f64, tau: usize, seed: HashSeed) -> Self {
        Self::with_buckets(epsilon, ErrorType::D, default_buckets(epsilon, ErrorType::D), tau, seed)
    }

    /// Configuration for the `eps * m` total guarantee, `tau = ceil(2 / eps)`.
    pub fn error_m(epsilon: f64, seed: HashSeed) -> Self {
        Self::with_buckets(
            epsilon,
            ErrorType::M,
            default_buckets(epsilon, ErrorType::M),
            default_tau_m(epsilon),
            seed,
        )
    }

    /// Derives `T` and `H` from an explicit bucket count.
    pub fn with_buckets(
        epsilon: f64,
        error_type: ErrorType,
        buckets: usize,
        tau: usize,
        seed: HashSeed,
    ) -> Self {
        let b = buckets.max(1) as f64;
        Self {
            epsilon,
            error_type,
            buckets,
            tau,
            max_copies: (2.0 * b.log2()).ceil().max(0.0) as usize + 4,
            id_domain: (64.0 * b * b).min(u64::MAX as f64) as u64,
            sampling_constant: DEFAULT_SAMPLING_CONSTANT,
            domain_size: u64::MAX,
            distinct_constant: KMV_CAPACITY_CONSTANT,
            backend: HashBackend::Mixer,
            fixed_level: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon {} not in (0, 1)", self.epsilon));
        }
        if self.buckets == 0 {
            return fail("bucket count B must be positive".into());
        }
        if self.tau == 0 {
            return fail("tau must be positive".into());
        }
        if self.max_copies < 2 {
            return fail(format!("max copies H = {} must be at least 2", self.max_copies));
        }
        let b = self.buckets as u128;
        if (self.id_domain as u128) < b * b {
            return fail(format!("id domain T = {} smaller than B^2", self.id_domain));
        }
        if !(self.sampling_constant > 0.0 && self.sampling_constant.is_finite()) {
            return fail(format!("sampling constant K = {} must be positive", self.sampling_constant));
        }
        if self.domain_size == 0 {
            return fail("domain size n must be positive".into());
        }
        if self.distinct_constant.is_nan() || self.distinct_constant <= 0.0 {
            return fail("distinct sketch constant must be positive".into());
        }
        if let Some(level) = self.fixed_level {
            if !(1..=MAX_LEVEL + 1).contains(&level) {
                return fail(format!("fixed level {level} outside [1, 65]"));
            }
        }
        Ok(())
    }
}

/// A `(level, counter)` pair stored in a bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketEntry {
    pub level: u8,
    /// In `1..=tau + 1`.
    pub count: u32,
    /// Set once the counter passed `tau`.
    pub saturated: bool,
}

/// The main table of `B` buckets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketArray {
    buckets: Vec<Vec<BucketEntry>>,
}

impl BucketArray {
    pub fn new(buckets: usize) -> Self {
        Self {
            buckets: vec![Vec::new(); buckets],
        }
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn bucket(&self, index: usize) -> &[BucketEntry] {
        &self.buckets[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[BucketEntry]> {
        self.buckets.iter().map(Vec::as_slice)
    }

    fn increment(&mut self, index: usize, level: u8, tau: usize) {
        let bucket = &mut self.buckets[index];
        match bucket.iter_mut().find(|e| e.level == level) {
            Some(entry) if !entry.saturated => {
                entry.count += 1;
                if entry.count as usize > tau {
                    entry.saturated = true;
                }
            }
            Some(_) => {}
            None => bucket.push(BucketEntry {
                level,
                count: 1,
                saturated: tau == 0,
            }),
        }
    }

    /// Shifts every level down by one and drops entries that fall below zero.
    pub fn shift_levels(&mut self) {
        for bucket in &mut self.buckets {
            bucket.retain_mut(|e| {
                if e.level == 0 {
                    false
                } else {
                    e.level -= 1;
                    true
                }
            });
        }
    }

    /// Number of nonempty buckets `G` and the per-total histogram `b_1..b_tau`.
    pub fn stats(&self, tau: usize) -> BucketStats {
        let mut occupied = 0u64;
        let mut counts = vec![0u64; tau];
        for bucket in &self.buckets {
            if bucket.is_empty() {
                continue;
            }
            occupied += 1;
            if bucket.iter().any(|e| e.saturated) {
                continue;
            }
            let total: u64 = bucket.iter().map(|e| e.count as u64).sum();
            if (1..=tau as u64).contains(&total) {
                counts[total as usize - 1] += 1;
            }
        }
        BucketStats { occupied, counts }
    }

    /// Approximate heap footprint in bytes.
    pub fn size_bytes(&self) -> usize {
        self.buckets.len() * std::mem::size_of::<Vec<BucketEntry>>()
            + self
                .buckets
                .iter()
                .map(|b| b.capacity() * std::mem::size_of::<BucketEntry>())
                .sum::<usize>()
    }
}

/// Adds one to the level-`level` counter of each listed bucket, creating the
/// entry when absent. Counters stop at `tau + 1` and are then marked
/// saturated.
pub fn increment_counters(array: &mut BucketArray, targets: &[usize], level: u8, tau: usize) {
    for &index in targets {
        array.increment(index, level, tau);
    }
}

/// Occupancy summary extracted after the stream ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketStats {
    /// `G`: buckets holding at least one entry.
    pub occupied: u64,
    /// `b_i` at index `i - 1`: unsaturated buckets whose total is exactly `i`.
    pub counts: Vec<u64>,
}

/// Streaming state of the profile sketch.
#[derive(Debug, Clone)]
pub struct ProfileSketch {
    config: SketchConfig,
    array: BucketArray,
    level: u32,
    len: u64,
    distinct: KmvSketch,
    tracker: Option<TrackingDistinct>,
    sampler: HashFunction,
    compressor: HashFunction,
    copies: HashFunction,
    placements: Vec<HashFunction>,
    targets: Vec<usize>,
}

impl ProfileSketch {
    pub fn new(config: SketchConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let backend = config.backend;
        let placements = (0..config.max_copies)
            .map(|i| HashFunction::new(backend, seed.derive(16 + i as u64)))
            .collect();
        let tracker = match config.error_type {
            ErrorType::D => Some(TrackingDistinct::new(seed.derive(2))),
            ErrorType::M => None,
        };
        Ok(Self {
            array: BucketArray::new(config.buckets),
            level: config.fixed_level.unwrap_or(1),
            len: 0,
            distinct: KmvSketch::with_accuracy(config.epsilon, config.distinct_constant, seed.derive(1)),
            tracker,
            sampler: HashFunction::new(backend, seed.derive(3)),
            compressor: HashFunction::new(backend, seed.derive(4)),
            copies: HashFunction::new(backend, seed.derive(5)),
            placements,
            targets: Vec::with_capacity(config.max_copies),
            config,
        })
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn array(&self) -> &BucketArray {
        &self.array
    }

    /// Current sampling level; elements whose level is at least this are kept.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of updates applied.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn distinct(&self) -> &KmvSketch {
        &self.distinct
    }

    /// The tracking estimate `D~_t` (type D only).
    pub fn tracking_estimate(&self) -> Option<f64> {
        self.tracker.as_ref().map(TrackingDistinct::estimate)
    }

    /// Sampling level of `x` under `g1`.
    pub fn element_level(&self, x: u64) -> u32 {
        self.sampler.level(x)
    }

    /// Number of Poisson copies `x` receives, after the `H` cap.
    pub fn copy_count(&self, x: u64) -> usize {
        let compressed = self.compressor.bounded(x, self.config.id_domain);
        (poisson_unit_draw(self.copies.unit(compressed)) as usize).min(self.config.max_copies)
    }

    /// Buckets that receive the copies of `x`, in copy order.
    pub fn placements(&self, x: u64) -> Vec<usize> {
        let compressed = self.compressor.bounded(x, self.config.id_domain);
        let copies = self.copy_count(x);
        self.placements[..copies]
            .iter()
            .map(|h| h.bounded(compressed, self.config.buckets as u64) as usize)
            .collect()
    }

    pub fn update(&mut self, x: u64) {
        self.len += 1;
        self.distinct.update(x);
        if let Some(tracker) = &mut self.tracker {
            tracker.update(x);
        }
        if self.config.fixed_level.is_none() && self.should_advance() {
            self.advance_level();
        }

        let level = self.sampler.level(x);
        if level < self.level {
            return;
        }
        let compressed = self.compressor.bounded(x, self.config.id_domain);
        let copies = (poisson_unit_draw(self.copies.unit(compressed)) as usize)
            .min(self.config.max_copies);
        if copies == 0 {
            return;
        }
        let buckets = self.config.buckets as u64;
        self.targets.clear();
        self.targets.extend(
            self.placements[..copies]
                .iter()
                .map(|h| h.bounded(compressed, buckets) as usize),
        );
        increment_counters(&mut self.array, &self.targets, (level - self.level) as u8, self.config.tau);
    }

    pub fn extend<I: IntoIterator<Item = u64>>(&mut self, xs: I) {
        for x in xs {
            self.update(x);
        }
    }

    fn should_advance(&self) -> bool {
        if self.level >= MAX_LEVEL {
            return false;
        }
        let scale = 2f64.powi(self.level as i32);
        let k_over_b = self.config.sampling_constant / self.config.buckets as f64;
        match self.config.error_type {
            ErrorType::M => {
                let bound = (self.len as f64 * k_over_b).min(self.config.domain_size as f64);
                scale < bound
            }
            ErrorType::D => {
                let tracked = self.tracking_estimate().unwrap_or(0.0);
                scale < tracked * k_over_b
            }
        }
    }

    /// Halves the sampling probability.
    pub fn advance_level(&mut self) {
        if self.level >= MAX_LEVEL {
            return;
        }
        self.level += 1;
        self.array.shift_levels();
    }

    pub fn bucket_stats(&self) -> BucketStats {
        self.array.stats(self.config.tau)
    }

    /// Approximate state footprint in bytes.
    pub fn size_bytes(&self) -> usize {
        self.array.size_bytes()
            + self.distinct.size_bytes()
            + self.tracker.as_ref().map_or(0, TrackingDistinct::size_bytes)
            + std::mem::size_of::<Self>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_d(eps: f64, tau: usize, seed: u64) -> SketchConfig {
        SketchConfig::error_d(eps, tau, HashSeed(seed))
    }

    #[test]
    fn default_constants() {
        let cfg = cfg_d(0.1, 3, 0);
        assert_eq!(cfg.buckets, 6400);
        assert_eq!(cfg.id_domain, 64 * 6400 * 6400);
        // ceil(2 * log2 6400) + 4 = ceil(25.29) + 4
        assert_eq!(cfg.max_copies, 30);
        assert_eq!(cfg.sampling_constant, 16.0);
        let m = SketchConfig::error_m(0.2, HashSeed(0));
        assert_eq!(m.tau, 10);
        // ceil(4 ln 7 / 0.04) = ceil(194.59)
        assert_eq!(m.buckets, 195);
    }

    #[test]
    fn fresh_sketch_is_empty() {
        let sk = ProfileSketch::new(cfg_d(0.1, 3, 0)).unwrap();
        assert_eq!(sk.level(), 1);
        assert_eq!(sk.len(), 0);
        assert_eq!(sk.array().len(), 6400);
        assert!(sk.array().iter().all(<[BucketEntry]>::is_empty));
        assert_eq!(sk.bucket_stats(), BucketStats { occupied: 0, counts: vec![0; 3] });
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = cfg_d(0.1, 3, 0);
        cfg.buckets = 0;
        assert!(ProfileSketch::new(cfg).is_err());
        let mut cfg = cfg_d(0.1, 3, 0);
        cfg.tau = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = cfg_d(0.1, 3, 0);
        cfg.max_copies = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = cfg_d(0.1, 3, 0);
        cfg.id_domain = 100;
        assert!(cfg.validate().is_err());
        assert!(cfg_d(1.5, 3, 0).validate().is_err());
        assert!(cfg_d(0.0, 3, 0).validate().is_err());
    }

    #[test]
    fn increment_counters_rules() {
        let mut arr = BucketArray::new(4);
        increment_counters(&mut arr, &[2], 0, 3);
        assert_eq!(arr.bucket(2), &[BucketEntry { level: 0, count: 1, saturated: false }]);

        for _ in 0..2 {
            increment_counters(&mut arr, &[2], 0, 3);
        }
        assert_eq!(arr.bucket(2)[0].count, 3);
        increment_counters(&mut arr, &[2], 0, 3);
        assert_eq!(arr.bucket(2), &[BucketEntry { level: 0, count: 4, saturated: true }]);
        increment_counters(&mut arr, &[2], 0, 3);
        assert_eq!(arr.bucket(2)[0].count, 4, "saturated counters stay at tau + 1");

        increment_counters(&mut arr, &[1], 2, 3);
        increment_counters(&mut arr, &[1], 5, 3);
        assert_eq!(arr.bucket(1).len(), 2);
    }

    #[test]
    fn shifting_levels_drops_level_zero() {
        let mut arr = BucketArray::new(2);
        increment_counters(&mut arr, &[0], 0, 5);
        increment_counters(&mut arr, &[1], 3, 5);
        increment_counters(&mut arr, &[1], 3, 5);
        arr.shift_levels();
        assert!(arr.bucket(0).is_empty());
        assert_eq!(arr.bucket(1), &[BucketEntry { level: 2, count: 2, saturated: false }]);
    }

    #[test]
    fn advance_without_level_zero_keeps_occupancy() {
        let mut arr = BucketArray::new(3);
        increment_counters(&mut arr, &[0, 1], 1, 5);
        let before = arr.stats(5).occupied;
        arr.shift_levels();
        assert_eq!(arr.stats(5).occupied, before);
    }

    #[test]
    fn bucket_totals_sum_levels() {
        let mut arr = BucketArray::new(3);
        increment_counters(&mut arr, &[0], 0, 5);
        increment_counters(&mut arr, &[0], 0, 5);
        increment_counters(&mut arr, &[0], 1, 5);
        let stats = arr.stats(5);
        assert_eq!(stats.occupied, 1);
        assert_eq!(stats.counts, vec![0, 0, 1, 0, 0]);
    }

    #[test]
    fn saturated_buckets_only_count_as_occupied() {
        let mut arr = BucketArray::new(3);
        for _ in 0..3 {
            increment_counters(&mut arr, &[1], 0, 2);
        }
        increment_counters(&mut arr, &[2], 0, 2);
        let stats = arr.stats(2);
        assert_eq!(stats.occupied, 2);
        assert_eq!(stats.counts, vec![1, 0]);
    }

    /// Finds an element satisfying `pred` under the sketch's hash functions.
    fn find_element(pred: impl Fn(u64) -> bool) -> u64 {
        (0..1_000_000u64).find(|&x| pred(x)).expect("no element found")
    }

    #[test]
    fn update_inserts_poisson_copies() {
        let mut sk = ProfileSketch::new(cfg_d(0.1, 3, 7)).unwrap();
        let x = find_element(|x| sk.element_level(x) == 1 && sk.copy_count(x) == 2);
        let targets = sk.placements(x);
        sk.update(x);
        for &b in &targets {
            assert!(sk.array().bucket(b).iter().any(|e| e.level == 0));
        }
        let total: u32 = sk.array().iter().flatten().map(|e| e.count).sum();
        assert_eq!(total, 2);
    }

    #[test]
    fn zero_copies_leave_array_unchanged() {
        let mut sk = ProfileSketch::new(cfg_d(0.1, 3, 7)).unwrap();
        let x = find_element(|x| sk.copy_count(x) == 0);
        sk.update(x);
        assert!(sk.array().iter().all(<[BucketEntry]>::is_empty));
        assert_eq!(sk.len(), 1);
    }

    #[test]
    fn unsampled_elements_are_ignored() {
        let mut cfg = cfg_d(0.1, 3, 9);
        cfg.fixed_level = Some(4);
        let mut sk = ProfileSketch::new(cfg).unwrap();
        let x = find_element(|x| sk.element_level(x) < 4 && sk.copy_count(x) > 0);
        sk.update(x);
        assert!(sk.array().iter().all(<[BucketEntry]>::is_empty));
    }

    #[test]
    fn sampling_rate_halves_per_level() {
        // Pooled over 10 seeds x 1e5 elements.
        let mut kept = [0u64; 11];
        let n = 100_000u64;
        for seed in 0..10 {
            let sk = ProfileSketch::new(cfg_d(0.1, 3, seed)).unwrap();
            for x in 0..n {
                let l = sk.element_level(x) as usize;
                for (level, slot) in kept.iter_mut().enumerate().skip(1) {
                    if l >= level {
                        *slot += 1;
                    }
                }
            }
        }
        for (level, &count) in kept.iter().enumerate().skip(1) {
            let expected = 10.0 * n as f64 * 2f64.powi(1 - level as i32);
            let ratio = count as f64 / expected;
            assert!((0.9..=1.1).contains(&ratio), "level {level}: ratio {ratio}");
        }
    }

    #[test]
    fn level_advances_with_distinct_count() {
        let mut sk = ProfileSketch::new(cfg_d(0.2, 3, 1)).unwrap();
        let mut last = sk.level();
        for x in 0..200_000u64 {
            sk.update(x);
            assert!(sk.level() >= last);
            last = sk.level();
        }
        // 2^level tracks D K / B = 2e5 * 16 / 1600 = 2000.
        assert!((10..=13).contains(&sk.level()), "level {}", sk.level());
        for bucket in sk.array().iter() {
            let mut levels: Vec<u8> = bucket.iter().map(|e| e.level).collect();
            levels.sort_unstable();
            levels.dedup();
            assert_eq!(levels.len(), bucket.len(), "duplicate levels in a bucket");
        }
    }

    #[test]
    fn type_m_level_follows_stream_length() {
        let mut sk = ProfileSketch::new(SketchConfig::error_m(0.2, HashSeed(3))).unwrap();
        for x in 0..100_000u64 {
            sk.update(x % 10);
        }
        // smallest level with 2^level >= t K / B = 1e5 * 16 / 195 ~ 8205
        assert_eq!(sk.level(), 14);
    }

    #[test]
    fn type_m_respects_domain_bound() {
        let mut cfg = SketchConfig::error_m(0.2, HashSeed(3));
        cfg.domain_size = 16;
        let mut sk = ProfileSketch::new(cfg).unwrap();
        for x in 0..100_000u64 {
            sk.update(x % 16);
        }
        assert_eq!(sk.level(), 4);
    }
}
