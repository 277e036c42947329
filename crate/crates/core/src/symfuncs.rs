//! Symmetric functions of element frequencies, evaluated from a profile.
//!
//! Any statistic invariant to relabeling elements is a function of the
//! profile. Head terms (frequencies `<= tau`) come from the profile, tail
//! terms from the distinct count `D` and stream length `m`.

use crate::error::{Error, Result};
use crate::estimator::EstimatedProfile;
use crate::profile::Profile;

/// A profile together with the distinct count and stream length.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamAggregates {
    /// `phi_i` at index `i - 1`.
    head: Vec<f64>,
    /// Largest frequency the profile covers; `None` when exact and unbounded.
    range: Option<u64>,
    pub distinct: f64,
    pub length: f64,
}

/// Tail weighting of the Huber objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HuberTail {
    /// `tau * i - 1/2` per element above the threshold.
    #[default]
    Half,
    /// `tau * i - tau^2 / 2`, continuous at `i = tau`.
    Classical,
}

impl StreamAggregates {
    /// Aggregates of an exact profile; every frequency is covered.
    pub fn exact(profile: &Profile) -> Self {
        let max = profile.max_frequency() as usize;
        let mut head = vec![0.0; max];
        for (i, c) in profile.iter() {
            head[i as usize - 1] = c as f64;
        }
        Self {
            head,
            range: None,
            distinct: profile.distinct() as f64,
            length: profile.mass() as f64,
        }
    }

    /// Aggregates of an estimate, with `D^` from the estimate and exact `m`.
    pub fn estimated(profile: &EstimatedProfile, length: u64) -> Self {
        Self {
            head: profile.values.clone(),
            range: Some(profile.tau() as u64),
            distinct: profile.distinct_estimate,
            length: length as f64,
        }
    }

    fn phi(&self, i: u64) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.head.get(i as usize - 1).copied().unwrap_or(0.0)
    }

    fn check(&self, tau: u64) -> Result<()> {
        match self.range {
            Some(available) if tau > available => Err(Error::ThresholdOutOfRange {
                requested: tau,
                available,
            }),
            _ => Ok(()),
        }
    }

    /// `sum_{i <= tau} phi_i * weight(i)`.
    fn head_sum(&self, tau: u64, weight: impl Fn(f64) -> f64) -> f64 {
        (1..=tau).map(|i| self.phi(i) * weight(i as f64)).sum()
    }

    /// Distinct elements with frequency at most `tau`.
    pub fn count_freq_at_most(&self, tau: u64) -> Result<f64> {
        self.check(tau)?;
        Ok(self.head_sum(tau, |_| 1.0))
    }

    /// Distinct elements with frequency at least `tau`: `D - sum_{i < tau} phi_i`.
    pub fn count_freq_at_least(&self, tau: u64) -> Result<f64> {
        if tau == 0 {
            return Ok(self.distinct);
        }
        Ok(self.distinct - self.count_freq_at_most(tau - 1)?)
    }

    /// Mass of elements with frequency at most `tau`: `sum_{i <= tau} i phi_i`.
    pub fn mass_at_most(&self, tau: u64) -> Result<f64> {
        self.check(tau)?;
        Ok(self.head_sum(tau, |i| i))
    }

    /// Mass of elements with frequency at least `tau`: `m - sum_{i < tau} i phi_i`.
    pub fn mass_at_least(&self, tau: u64) -> Result<f64> {
        if tau == 0 {
            return Ok(self.length);
        }
        Ok(self.length - self.mass_at_most(tau - 1)?)
    }

    /// `sum_{i <= tau} i phi_i + sum_{i > tau} phi_i`.
    pub fn capped_statistic(&self, tau: u64) -> Result<f64> {
        self.check(tau)?;
        Ok(self.head_sum(tau, |i| i) + (self.distinct - self.head_sum(tau, |_| 1.0)))
    }

    /// `sum_x min(f_x, tau)`: each element above the threshold counts `tau`.
    pub fn capped_statistic_saturating(&self, tau: u64) -> Result<f64> {
        self.check(tau)?;
        let t = tau as f64;
        Ok(self.head_sum(tau, |i| i) + t * (self.distinct - self.head_sum(tau, |_| 1.0)))
    }

    /// Tukey biweight objective with threshold `tau`.
    pub fn tukey_objective(&self, tau: u64) -> Result<f64> {
        self.check(tau)?;
        let t2 = (tau * tau) as f64;
        let plateau = t2 / 6.0;
        let head = self.head_sum(tau, |i| plateau * (1.0 - (1.0 - i * i / t2).powi(3)));
        Ok(head + (self.distinct - self.head_sum(tau, |_| 1.0)) * plateau)
    }

    /// Huber objective with threshold `tau`; the tail is
    /// `tau * mass_at_least(tau + 1) - c * count_freq_at_least(tau + 1)`.
    pub fn huber_objective(&self, tau: u64, tail: HuberTail) -> Result<f64> {
        self.check(tau)?;
        let t = tau as f64;
        let head = self.head_sum(tau, |i| i * i / 2.0);
        let offset = match tail {
            HuberTail::Half => 0.5,
            HuberTail::Classical => t * t / 2.0,
        };
        let tail_mass = self.length - self.head_sum(tau, |i| i);
        let tail_count = self.distinct - self.head_sum(tau, |_| 1.0);
        Ok(head + t * tail_mass - offset * tail_count)
    }
}

/// Direct evaluation over raw per-element frequencies.
pub mod direct {
    use super::HuberTail;

    pub fn capped_statistic(freqs: &[u64], tau: u64) -> f64 {
        freqs.iter().map(|&f| if f <= tau { f as f64 } else { 1.0 }).sum()
    }

    pub fn capped_statistic_saturating(freqs: &[u64], tau: u64) -> f64 {
        freqs.iter().map(|&f| f.min(tau) as f64).sum()
    }

    pub fn tukey_objective(freqs: &[u64], tau: u64) -> f64 {
        let t2 = (tau * tau) as f64;
        freqs
            .iter()
            .map(|&f| {
                let plateau = t2 / 6.0;
                if f <= tau {
                    let r = (f * f) as f64 / t2;
                    plateau * (1.0 - (1.0 - r).powi(3))
                } else {
                    plateau
                }
            })
            .sum()
    }

    pub fn huber_objective(freqs: &[u64], tau: u64, tail: HuberTail) -> f64 {
        let t = tau as f64;
        freqs
            .iter()
            .map(|&f| {
                let x = f as f64;
                if f <= tau {
                    x * x / 2.0
                } else {
                    match tail {
                        HuberTail::Half => t * x - 0.5,
                        HuberTail::Classical => t * x - t * t / 2.0,
                    }
                }
            })
            .sum()
    }

    pub fn count_at_most(freqs: &[u64], tau: u64) -> f64 {
        freqs.iter().filter(|&&f| f <= tau).count() as f64
    }

    pub fn count_at_least(freqs: &[u64], tau: u64) -> f64 {
        freqs.iter().filter(|&&f| f >= tau).count() as f64
    }

    pub fn mass_at_most(freqs: &[u64], tau: u64) -> f64 {
        freqs.iter().filter(|&&f| f <= tau).sum::<u64>() as f64
    }

    pub fn mass_at_least(freqs: &[u64], tau: u64) -> f64 {
        freqs.iter().filter(|&&f| f >= tau).sum::<u64>() as f64
    }
}
