//! Recovering the sampled profile from collision-corrupted bucket counts.
//!
//! Under Poissonized hashing the number of frequency-`j` sampled elements in
//! a bucket is Poisson(`F_j / B`), independently across `j` and buckets. A
//! bucket with total `i` is either *good* (a single frequency-`i` element) or
//! *bad* (two or more smaller elements summing to `i`). With
//! `e^{S/B} E[b_i] = F_i + r_i(F_1..F_{i-1})`, the profile is recovered one
//! frequency at a time:
//!
//! ```text
//! F_i = max(b_i e^{S/B} - r_i(F_1, ..., F_{i-1}), 0)
//! ```
//!
//! `r_i` sums over integer partitions of `i`. [`DpTable`] evaluates it in
//! polynomial time by splitting on the smallest part; [`rhat_bruteforce`]
//! enumerates the partitions directly and serves as an independent check.

use crate::error::{Error, Result};

/// Occupancy-based estimate of the number of sampled elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSizeEstimate {
    pub value: f64,
    /// Every bucket was occupied; `value` is the clamp `B ln B`.
    pub saturated: bool,
}

/// `-B ln(1 - G/B)`, clamped to `B ln B` when all `B` buckets are occupied.
pub fn estimate_sample_size(occupied: u64, buckets: u64) -> Result<SampleSizeEstimate> {
    if occupied > buckets {
        return Err(Error::OccupancyOverflow { occupied, buckets });
    }
    let b = buckets as f64;
    if occupied == buckets && buckets > 0 {
        return Ok(SampleSizeEstimate {
            value: b * b.ln(),
            saturated: true,
        });
    }
    let value = if occupied == 0 {
        0.0
    } else {
        -b * (-(occupied as f64) / b).ln_1p()
    };
    Ok(SampleSizeEstimate {
        value,
        saturated: false,
    })
}

/// Inputs to [`invert_counts`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvertInput {
    pub buckets: f64,
    pub sample_size: f64,
    /// `b_i` at index `i - 1`. Real-valued so that expected counts can be
    /// inverted as well as observed ones.
    pub counts: Vec<f64>,
}

impl InvertInput {
    pub fn from_counts(buckets: u64, sample_size: f64, counts: &[u64]) -> Self {
        Self {
            buckets: buckets as f64,
            sample_size,
            counts: counts.iter().map(|&c| c as f64).collect(),
        }
    }

    pub fn tau(&self) -> usize {
        self.counts.len()
    }
}

/// Estimated profile of the sampled set, `F^_1..F^_tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleProfile {
    pub counts: Vec<f64>,
}

impl SampleProfile {
    /// `F^_i`, 1-based.
    pub fn get(&self, i: usize) -> f64 {
        self.counts.get(i.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// `tau x tau` table where entry `[j, x]` (1-based) is the expected number of
/// buckets with total `j` whose smallest element has frequency `x`. The
/// diagonal `[j, j]` holds `F_j` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    tau: usize,
    buckets: f64,
    cells: Vec<f64>,
}

impl DpTable {
    fn zeroed(tau: usize, buckets: f64) -> Self {
        Self {
            tau,
            buckets,
            cells: vec![0.0; tau * tau],
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// Entry `[j, x]`, 1-based.
    pub fn get(&self, j: usize, x: usize) -> f64 {
        self.cells[(j - 1) * self.tau + (x - 1)]
    }

    fn set(&mut self, j: usize, x: usize, v: f64) {
        self.cells[(j - 1) * self.tau + (x - 1)] = v;
    }

    /// Expected number of bad buckets with total `i`: `sum_{x <= i/2} [i, x]`.
    pub fn collision_mass(&self, i: usize) -> f64 {
        (1..=i / 2).map(|x| self.get(i, x)).sum()
    }

    /// Forward model: the table implied by a known profile `f` (`f[j - 1] = F_j`).
    pub fn forward(f: &[f64], buckets: f64) -> Self {
        let mut table = Self::zeroed(f.len(), buckets);
        for i in 1..=f.len() {
            table.fill_row(i);
            table.set(i, i, f[i - 1]);
        }
        table
    }

    /// Fills `[i, x]` for `x <= i/2` from rows `< i`.
    fn fill_row(&mut self, i: usize) {
        let b = self.buckets;
        for x in 1..=i / 2 {
            let rate = self.get(x, x) / b;
            let mut power = 1.0; // rate^k / k!
            let mut acc = 0.0;
            for k in 1..i / x {
                power *= rate / k as f64;
                let rest = i - k * x;
                let tail: f64 = (x + 1..=rest).map(|xp| self.get(rest, xp)).sum();
                acc += tail * power;
            }
            if i.is_multiple_of(x) {
                // B (F_x / B)^{i/x} / (i/x)!
                let q = i / x;
                power *= rate / q as f64;
                acc += b * power;
            }
            self.set(i, x, acc);
        }
    }
}

/// Iterative inversion of bucket counts into the sampled profile.
pub fn invert_counts(input: &InvertInput) -> SampleProfile {
    invert_counts_table(input).0
}

/// As [`invert_counts`], also returning the filled table.
pub fn invert_counts_table(input: &InvertInput) -> (SampleProfile, DpTable) {
    let tau = input.tau();
    let scale = (input.sample_size / input.buckets).exp();
    let mut table = DpTable::zeroed(tau, input.buckets);
    for i in 1..=tau {
        table.fill_row(i);
        let good = input.counts[i - 1] * scale - table.collision_mass(i);
        table.set(i, i, good.max(0.0));
    }
    let counts = (1..=tau).map(|i| table.get(i, i)).collect();
    (SampleProfile { counts }, table)
}

/// `r_i` by exhaustive enumeration of the partitions of `i` into at least two
/// parts:
/// `B * sum_y prod_j (F_j / B)^{y_j} / y_j!`. `f[j - 1] = F_j`.
pub fn rhat_bruteforce(f: &[f64], buckets: f64, i: usize) -> Result<f64> {
    if i < 2 {
        return Err(Error::PartitionIndex(i));
    }
    let rates: Vec<f64> = f.iter().take(i - 1).map(|&v| v / buckets).collect();
    let mut total = 0.0;
    let mut parts = Vec::with_capacity(i);
    visit_partitions(i, i - 1, &mut parts, &mut |parts| {
        if parts.len() < 2 {
            return;
        }
        let mut term = 1.0;
        let mut run = 0usize;
        for (pos, &p) in parts.iter().enumerate() {
            run = if pos > 0 && parts[pos - 1] == p { run + 1 } else { 1 };
            term *= rates.get(p - 1).copied().unwrap_or(0.0) / run as f64;
        }
        total += term;
    });
    Ok(buckets * total)
}

/// Calls `visit` on each partition of `n` into parts `<= max_part`, listed in
/// non-increasing order.
fn visit_partitions(n: usize, max_part: usize, parts: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if n == 0 {
        visit(parts);
        return;
    }
    for p in (1..=max_part.min(n)).rev() {
        parts.push(p);
        visit_partitions(n - p, p, parts, visit);
        parts.pop();
    }
}
