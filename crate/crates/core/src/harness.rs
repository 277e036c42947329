//! Synthetic streams and seeded Monte-Carlo trials.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{finalize, DmConfig, DmSketch, EstimatedProfile};
use crate::hashing::{mix64, HashSeed};
use crate::profile::{exact_profile, full_l1, head_l1, Profile};
use crate::sketch::{ErrorType, ProfileSketch, SketchConfig};

fn default_true() -> bool {
    true
}

/// Recipe for a synthetic stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSpec {
    /// One distinct element per unit of `profile[i]`, each repeated `i` times.
    #[serde(alias = "profile")]
    ProfileTargeted {
        #[serde(with = "profile_keys")]
        profile: BTreeMap<u64, u64>,
        /// Optional consistency check against `sum_i i * profile[i]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<u64>,
        #[serde(default = "default_true")]
        shuffle: bool,
    },
    /// `m` draws from ranks `1..=support` with probability proportional to
    /// `rank^-alpha`.
    Zipf { alpha: f64, support: u64, m: u64 },
    /// `m` uniform draws from `1..=support`.
    Uniform { support: u64, m: u64 },
}

/// JSON object keys are strings; profile keys are decimal frequencies.
mod profile_keys {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<u64, u64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(map.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u64, u64>, D::Error> {
        let raw = BTreeMap::<String, u64>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<u64>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("profile key {k:?} is not a frequency")))
            })
            .collect()
    }
}

impl StreamSpec {
    pub fn profile(profile: impl IntoIterator<Item = (u64, u64)>) -> Self {
        StreamSpec::ProfileTargeted {
            profile: profile.into_iter().collect(),
            m: None,
            shuffle: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidStreamSpec(msg));
        match self {
            StreamSpec::ProfileTargeted { profile, m, .. } => {
                if profile.contains_key(&0) {
                    return fail("frequency 0 cannot appear in a profile".into());
                }
                let mass = profile
                    .iter()
                    .try_fold(0u64, |acc, (&i, &c)| i.checked_mul(c).and_then(|v| acc.checked_add(v)));
                match (mass, m) {
                    (None, _) => fail("profile mass overflows 64 bits".into()),
                    (Some(mass), Some(m)) if mass != *m => {
                        fail(format!("profile mass {mass} disagrees with m = {m}"))
                    }
                    _ => Ok(()),
                }
            }
            StreamSpec::Zipf { alpha, support, .. } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return fail(format!("zipf exponent {alpha} must be finite and nonnegative"));
                }
                if *support == 0 {
                    return fail("zipf support must be positive".into());
                }
                Ok(())
            }
            StreamSpec::Uniform { support, .. } => {
                if *support == 0 {
                    return fail("uniform support must be positive".into());
                }
                Ok(())
            }
        }
    }
}

/// Materializes the stream described by `spec`; deterministic in `seed`.
pub fn generate_stream(spec: &StreamSpec, seed: u64) -> Result<Vec<u64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        StreamSpec::ProfileTargeted { profile, shuffle, .. } => {
            let mass: u64 = profile.iter().map(|(&i, &c)| i * c).sum();
            let mut stream = Vec::with_capacity(mass as usize);
            let mut next_id = 1u64;
            for (&freq, &count) in profile {
                for _ in 0..count {
                    stream.extend(std::iter::repeat_n(next_id, freq as usize));
                    next_id += 1;
                }
            }
            if *shuffle {
                stream.shuffle(&mut rng);
            }
            Ok(stream)
        }
        StreamSpec::Zipf { alpha, support, m } => {
            let table = ZipfTable::new(*alpha, *support);
            Ok((0..*m).map(|_| table.sample(&mut rng)).collect())
        }
        StreamSpec::Uniform { support, m } => Ok((0..*m).map(|_| rng.gen_range(1..=*support)).collect()),
    }
}

/// Cumulative weights of ranks `1..=support` under `rank^-alpha`.
#[derive(Debug, Clone)]
pub struct ZipfTable {
    cumulative: Vec<f64>,
}

impl ZipfTable {
    pub fn new(alpha: f64, support: u64) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=support)
            .map(|r| {
                acc += (r as f64).powf(-alpha);
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let total = *self.cumulative.last().expect("support is positive");
        let u = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1) as u64 + 1
    }
}

/// Estimator run by each trial.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    /// The profile sketch; the per-trial seed replaces `config.seed`.
    Sketch(SketchConfig),
    /// Sampling baseline with rate `s / m`.
    Dm { epsilon: f64 },
    /// Sampling baseline with compressed ids.
    DmCompressed { epsilon: f64 },
    /// Sampling baseline with a fixed keep probability.
    DmRate { epsilon: f64, rate: f64 },
}

impl Estimator {
    /// Threshold `tau` for head error.
    pub fn tau(&self) -> usize {
        match self {
            Estimator::Sketch(cfg) => cfg.tau,
            Estimator::Dm { epsilon }
            | Estimator::DmCompressed { epsilon }
            | Estimator::DmRate { epsilon, .. } => (2.0 / epsilon).ceil() as usize,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Estimator::Sketch(cfg) => cfg.epsilon,
            Estimator::Dm { epsilon }
            | Estimator::DmCompressed { epsilon }
            | Estimator::DmRate { epsilon, .. } => *epsilon,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Sketch(_) => "sketch",
            Estimator::Dm { .. } | Estimator::DmRate { .. } => "dm",
            Estimator::DmCompressed { .. } => "dm-compressed",
        }
    }

    /// Runs the estimator over `stream` with `seed`.
    pub fn run(&self, stream: &[u64], seed: HashSeed) -> Result<EstimatedProfile> {
        let m = stream.len() as u64;
        let est = match self {
            Estimator::Sketch(cfg) => {
                let mut sk = ProfileSketch::new(SketchConfig { seed, ..cfg.clone() })?;
                sk.extend(stream.iter().copied());
                finalize(&sk)
            }
            Estimator::Dm { epsilon } => run_dm(DmConfig::new(*epsilon, m, seed), stream),
            Estimator::DmCompressed { epsilon } => run_dm(DmConfig::new(*epsilon, m, seed).compressed(), stream),
            Estimator::DmRate { epsilon, rate } => run_dm(DmConfig::new(*epsilon, m, seed).with_rate(*rate), stream),
        };
        Ok(est)
    }
}

fn run_dm(cfg: DmConfig, stream: &[u64]) -> EstimatedProfile {
    let mut sk = DmSketch::new(cfg);
    sk.extend(stream.iter().copied());
    sk.finalize()
}

/// Pass thresholds as fractions of `D` and `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Head-L1 passes when `<= head_factor * D`.
    pub head_factor: f64,
    /// Full-L1 passes when `<= full_factor * m`.
    pub full_factor: f64,
    /// Required fraction of passing trials.
    pub target_rate: f64,
}

impl Thresholds {
    /// `eps * D` and `eps * m` with a 0.7 success target.
    pub fn for_epsilon(epsilon: f64) -> Self {
        Self {
            head_factor: epsilon,
            full_factor: epsilon,
            target_rate: 0.7,
        }
    }
}

/// One trial's outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub head_l1: f64,
    pub full_l1: f64,
    #[serde(rename = "D")]
    pub distinct: u64,
    pub m: u64,
    #[serde(rename = "D_hat")]
    pub distinct_estimate: f64,
    #[serde(rename = "S_hat")]
    pub sample_size: f64,
    pub head_pass: bool,
    pub full_pass: bool,
    pub wall_ms: f64,
}

impl TrialReport {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &TrialReport) -> bool {
        TrialReport { wall_ms: 0.0, ..self.clone() } == TrialReport { wall_ms: 0.0, ..other.clone() }
    }
}

/// Quantiles of an error sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

impl ErrorSummary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.collect();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return Self { mean: 0.0, p50: 0.0, p90: 0.0, max: 0.0 };
        }
        let q = |p: f64| v[((p * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p50: q(0.5),
            p90: q(0.9),
            max: *v.last().unwrap(),
        }
    }
}

/// Aggregate over a campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub head_pass_rate: f64,
    pub head_pass_stderr: f64,
    pub full_pass_rate: f64,
    pub full_pass_stderr: f64,
    pub target_rate: f64,
    pub head_l1: ErrorSummary,
    pub full_l1: ErrorSummary,
}

fn binomial_stderr(rate: f64, n: usize) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

impl TrialSummary {
    pub fn of(reports: &[TrialReport], thresholds: Thresholds) -> Self {
        let n = reports.len();
        let rate = |f: fn(&TrialReport) -> bool| reports.iter().filter(|r| f(r)).count() as f64 / n.max(1) as f64;
        let head_pass_rate = rate(|r| r.head_pass);
        let full_pass_rate = rate(|r| r.full_pass);
        Self {
            trials: n,
            head_pass_rate,
            head_pass_stderr: binomial_stderr(head_pass_rate, n.max(1)),
            full_pass_rate,
            full_pass_stderr: binomial_stderr(full_pass_rate, n.max(1)),
            target_rate: thresholds.target_rate,
            head_l1: ErrorSummary::of(reports.iter().map(|r| r.head_l1)),
            full_l1: ErrorSummary::of(reports.iter().map(|r| r.full_l1)),
        }
    }
}

/// Seed of trial `index` under base seed `base`.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// Runs one trial: generates the stream and scores the estimate.
pub fn run_trial(spec: &StreamSpec, estimator: &Estimator, seed: u64, thresholds: Thresholds) -> Result<(TrialReport, EstimatedProfile, Profile)> {
    let stream = generate_stream(spec, seed)?;
    let exact = exact_profile(&stream);
    let start = Instant::now();
    let est = estimator.run(&stream, HashSeed(mix64(seed)))?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let tau = estimator.tau() as u64;
    let head = head_l1(&exact, |i| est.get(i), tau);
    let full = full_l1(&exact, |i| est.get(i), est.tau() as u64);
    let (d, m) = (exact.distinct(), exact.mass());
    let report = TrialReport {
        seed,
        head_l1: head,
        full_l1: full,
        distinct: d,
        m,
        distinct_estimate: est.distinct_estimate,
        sample_size: est.sample_size,
        head_pass: head <= thresholds.head_factor * d as f64,
        full_pass: full <= thresholds.full_factor * m as f64,
        wall_ms,
    };
    Ok((report, est, exact))
}

/// Runs `n_trials` independent trials in parallel, in seed order.
pub fn run_trials(
    spec: &StreamSpec,
    estimator: &Estimator,
    n_trials: usize,
    base_seed: u64,
    thresholds: Thresholds,
) -> Result<(Vec<TrialReport>, TrialSummary)> {
    if n_trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    spec.validate()?;
    let reports = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| run_trial(spec, estimator, trial_seed(base_seed, i), thresholds).map(|(r, _, _)| r))
        .collect::<Result<Vec<_>>>()?;
    let summary = TrialSummary::of(&reports, thresholds);
    Ok((reports, summary))
}

/// Convenience for building a sketch estimator for `error_type`.
pub fn sketch_estimator(epsilon: f64, error_type: ErrorType, tau: Option<usize>) -> Estimator {
    let cfg = match error_type {
        ErrorType::D => SketchConfig::error_d(epsilon, tau.unwrap_or(3), HashSeed(0)),
        ErrorType::M => {
            let mut cfg = SketchConfig::error_m(epsilon, HashSeed(0));
            if let Some(t) = tau {
                cfg.tau = t;
            }
            cfg
        }
    };
    Estimator::Sketch(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_streams() {
        let s = generate_stream(&StreamSpec::profile([(1, 5)]), 0).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(exact_profile(&s).as_map(), &BTreeMap::from([(1, 5)]));

        let s = generate_stream(&StreamSpec::profile([(3, 2)]), 0).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(exact_profile(&s).distinct(), 2);
    }

    #[test]
    fn inconsistent_profile_is_rejected() {
        let spec = StreamSpec::ProfileTargeted {
            profile: BTreeMap::from([(3, 2)]),
            m: Some(7),
            shuffle: false,
        };
        assert!(matches!(generate_stream(&spec, 0), Err(Error::InvalidStreamSpec(_))));
        let zero = StreamSpec::profile([(0, 2)]);
        assert!(zero.validate().is_err());
        assert!(StreamSpec::Zipf { alpha: f64::NAN, support: 3, m: 3 }.validate().is_err());
        assert!(StreamSpec::Uniform { support: 0, m: 3 }.validate().is_err());
    }

    #[test]
    fn zipf_stream_identities() {
        let spec = StreamSpec::Zipf { alpha: 1.2, support: 100_000, m: 1_000_000 };
        let s = generate_stream(&spec, 7).unwrap();
        let p = exact_profile(&s);
        assert_eq!(p.mass(), 1_000_000);
        assert!(s.iter().all(|&x| (1..=100_000).contains(&x)));
        // Rank 1 carries about 1 / zeta-partial(1.2) of the mass.
        let top = s.iter().filter(|&&x| x == 1).count() as f64 / 1e6;
        let norm: f64 = (1..=100_000u64).map(|r| (r as f64).powf(-1.2)).sum();
        assert!((top - 1.0 / norm).abs() < 0.005, "top share {top}");
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = StreamSpec::Uniform { support: 50, m: 1000 };
        assert_eq!(generate_stream(&spec, 3).unwrap(), generate_stream(&spec, 3).unwrap());
        assert_ne!(generate_stream(&spec, 3).unwrap(), generate_stream(&spec, 4).unwrap());
    }

    #[test]
    fn census_trial_is_exact() {
        let spec = StreamSpec::profile([(1, 40), (2, 10), (4, 3)]);
        let est = Estimator::DmRate { epsilon: 0.5, rate: 1.0 };
        let (reports, summary) = run_trials(&spec, &est, 1, 0, Thresholds::for_epsilon(0.5)).unwrap();
        assert_eq!(reports[0].head_l1, 0.0);
        assert_eq!(summary.head_pass_rate, 1.0);
    }

    #[test]
    fn trials_are_reproducible() {
        let spec = StreamSpec::Zipf { alpha: 1.1, support: 2000, m: 20_000 };
        let est = sketch_estimator(0.2, ErrorType::D, Some(3));
        let th = Thresholds::for_epsilon(0.2);
        let (a, sa) = run_trials(&spec, &est, 6, 11, th).unwrap();
        let (b, sb) = run_trials(&spec, &est, 6, 11, th).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.same_outcome(y)));
        assert_eq!(sa.head_pass_rate, sb.head_pass_rate);
        assert_eq!(sa.trials, 6);
        assert!((0.0..=1.0).contains(&sa.full_pass_rate));
        let seeds: std::collections::HashSet<u64> = a.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 6);
    }

    #[test]
    fn zero_trials_is_an_error() {
        let spec = StreamSpec::Uniform { support: 5, m: 5 };
        assert!(run_trials(&spec, &Estimator::Dm { epsilon: 0.2 }, 0, 0, Thresholds::for_epsilon(0.2)).is_err());
    }
}
