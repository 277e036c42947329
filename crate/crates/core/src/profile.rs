//! Exact frequency-of-frequencies profiles and L1 error metrics.

use std::collections::{BTreeMap, HashMap};

/// Sparse profile: `phi[i]` distinct elements appear exactly `i` times.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Profile(BTreeMap<u64, u64>);

impl Profile {
    pub fn new() -> Self {
        Self::default()
    }

    /// `phi_i`; zero when absent.
    pub fn get(&self, frequency: u64) -> u64 {
        self.0.get(&frequency).copied().unwrap_or(0)
    }

    /// Distinct count `D = sum_i phi_i`.
    pub fn distinct(&self) -> u64 {
        self.0.values().sum()
    }

    /// Stream length `m = sum_i i * phi_i`.
    pub fn mass(&self) -> u64 {
        self.0.iter().map(|(&i, &c)| i * c).sum()
    }

    pub fn max_frequency(&self) -> u64 {
        self.0.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Nonzero entries in increasing frequency order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.0.iter().map(|(&i, &c)| (i, c))
    }

    /// Profile of a collection of per-element frequencies.
    pub fn from_frequencies<I: IntoIterator<Item = u64>>(frequencies: I) -> Self {
        let mut map = BTreeMap::new();
        for f in frequencies.into_iter().filter(|&f| f > 0) {
            *map.entry(f).or_insert(0) += 1;
        }
        Profile(map)
    }

    pub fn as_map(&self) -> &BTreeMap<u64, u64> {
        &self.0
    }
}

impl FromIterator<(u64, u64)> for Profile {
    fn from_iter<I: IntoIterator<Item = (u64, u64)>>(iter: I) -> Self {
        Profile(iter.into_iter().filter(|&(i, c)| i > 0 && c > 0).collect())
    }
}

/// Per-element counts of a stream.
pub fn frequencies(stream: &[u64]) -> HashMap<u64, u64> {
    let mut counts = HashMap::with_capacity(stream.len() / 2 + 1);
    for &x in stream {
        *counts.entry(x).or_insert(0u64) += 1;
    }
    counts
}

/// Exact profile of `stream`.
pub fn exact_profile(stream: &[u64]) -> Profile {
    Profile::from_frequencies(frequencies(stream).into_values())
}

/// `sum_{i <= tau} |phi_i - est_i|`, where `estimate(i)` returns `est_i`.
pub fn head_l1(exact: &Profile, estimate: impl Fn(u64) -> f64, tau: u64) -> f64 {
    (1..=tau)
        .map(|i| (exact.get(i) as f64 - estimate(i)).abs())
        .sum()
}

/// `sum_i |phi_i - est_i|` over all frequencies. `estimate` is only queried on
/// `1..=est_tau`; estimates beyond are zero.
pub fn full_l1(exact: &Profile, estimate: impl Fn(u64) -> f64, est_tau: u64) -> f64 {
    let head = head_l1(exact, &estimate, est_tau);
    let tail: u64 = exact.iter().filter(|&(i, _)| i > est_tau).map(|(_, c)| c).sum();
    head + tail as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_has_empty_profile() {
        assert!(exact_profile(&[]).is_empty());
    }

    #[test]
    fn small_stream() {
        let p = exact_profile(&[7, 7, 9]);
        assert_eq!(p.as_map(), &BTreeMap::from([(1, 1), (2, 1)]));
        assert_eq!(p.distinct(), 2);
        assert_eq!(p.mass(), 3);
    }

    #[test]
    fn l1_metrics() {
        let p: Profile = [(1, 5), (2, 3), (9, 2)].into_iter().collect();
        let est = |i: u64| match i {
            1 => 4.5,
            2 => 3.0,
            3 => 1.0,
            _ => 0.0,
        };
        assert_eq!(head_l1(&p, est, 3), 1.5);
        assert_eq!(full_l1(&p, est, 3), 3.5);
    }
}
