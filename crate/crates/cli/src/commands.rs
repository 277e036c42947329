use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use profile_sketch::harness::{generate_stream, run_trials, Estimator, StreamSpec, Thresholds};
use profile_sketch::{
    finalize, DmConfig, DmSketch, ErrorType, EstimatedProfile, HashSeed, Profile, ProfileSketch, SketchConfig,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::report::{CampaignReport, EstimateReport, ExactReport, FORMAT_VERSION};
use crate::stream_file::{open_input, open_output, write_stream, StreamReader};
use crate::{Algo, EstimateArgs, EvaluateArgs, ExactArgs, GenerateArgs, Kind};

fn write_json<T: Serialize>(path: Option<&str>, value: &T) -> CliResult<()> {
    let mut out = open_output(path)?;
    let name = path.unwrap_or("<stdout>");
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(name, e))
}

fn parse_error_type(s: &str) -> CliResult<ErrorType> {
    s.parse().map_err(|_| CliError::Usage(format!("--error-type must be D or m, got {s:?}")))
}

fn check_epsilon(eps: f64) -> CliResult<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--epsilon {eps} must lie in (0, 1)")))
    }
}

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    let need = |v: Option<u64>, flag: &str| v.ok_or_else(|| CliError::Usage(format!("--kind {:?} needs {flag}", args.kind)));
    let spec = match args.kind {
        Kind::Profile => {
            let raw = args
                .spec
                .as_deref()
                .ok_or_else(|| CliError::Usage("--kind profile needs --spec".into()))?;
            let profile: BTreeMap<String, u64> = serde_json::from_str(raw)
                .map_err(|e| CliError::Usage(format!("--spec is not a JSON object of counts: {e}")))?;
            let profile = profile
                .into_iter()
                .map(|(k, v)| {
                    k.parse::<u64>()
                        .map(|k| (k, v))
                        .map_err(|_| CliError::Usage(format!("--spec key {k:?} is not a frequency")))
                })
                .collect::<CliResult<BTreeMap<_, _>>>()?;
            StreamSpec::ProfileTargeted {
                profile,
                m: args.m,
                shuffle: !args.no_shuffle,
            }
        }
        Kind::Zipf => StreamSpec::Zipf {
            alpha: args.alpha.ok_or_else(|| CliError::Usage("--kind zipf needs --alpha".into()))?,
            support: need(args.support, "--support")?,
            m: need(args.m, "--m")?,
        },
        Kind::Uniform => StreamSpec::Uniform {
            support: need(args.support, "--support")?,
            m: need(args.m, "--m")?,
        },
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let stream = generate_stream(&spec, args.seed)?;
    let mut out = open_output(args.out.as_deref())?;
    write_stream(&mut out, &stream, args.header).map_err(|e| CliError::io(args.out.as_deref().unwrap_or("<stdout>"), e))
}

fn sketch_config(args: &EstimateArgs, error_type: ErrorType) -> SketchConfig {
    let seed = HashSeed(args.seed);
    let mut cfg = match error_type {
        ErrorType::D => SketchConfig::error_d(args.epsilon, args.tau.unwrap_or(3), seed),
        ErrorType::M => SketchConfig::error_m(args.epsilon, seed),
    };
    if let Some(tau) = args.tau {
        cfg.tau = tau;
    }
    if let Some(b) = args.buckets {
        cfg = SketchConfig {
            tau: cfg.tau,
            ..SketchConfig::with_buckets(args.epsilon, error_type, b, cfg.tau, seed)
        };
    }
    cfg
}

/// Stream length for the sampling baseline, which fixes its rate up front.
fn dm_stream_len(args: &EstimateArgs) -> CliResult<u64> {
    if let Some(m) = args.m_hint {
        return Ok(m);
    }
    if args.input == "-" {
        return Err(CliError::Usage("--algo dm on standard input needs --m-hint".into()));
    }
    StreamReader::new(open_input(&args.input)?, &args.input, args.hash_tokens).for_each(|_| {})
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    check_epsilon(args.epsilon)?;
    let error_type = parse_error_type(&args.error_type)?;
    let reader = || -> CliResult<_> { Ok(StreamReader::new(open_input(&args.input)?, &args.input, args.hash_tokens)) };
    let (est, m): (EstimatedProfile, u64) = match args.algo {
        Algo::Sketch => {
            let mut sketch = ProfileSketch::new(sketch_config(args, error_type))?;
            let m = reader()?.for_each(|x| sketch.update(x))?;
            (finalize(&sketch), m)
        }
        Algo::Dm | Algo::DmCompressed => {
            if args.tau.is_some() {
                return Err(CliError::Usage("--tau is fixed to ceil(2 / epsilon) for the dm baselines".into()));
            }
            let len = dm_stream_len(args)?;
            let mut cfg = DmConfig::new(args.epsilon, len, HashSeed(args.seed));
            if matches!(args.algo, Algo::DmCompressed) {
                cfg = cfg.compressed();
            }
            let mut sketch = DmSketch::new(cfg);
            let m = reader()?.for_each(|x| sketch.update(x))?;
            (sketch.finalize(), m)
        }
    };
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    let report = EstimateReport {
        version: FORMAT_VERSION,
        error_type: est.error_type.to_string(),
        epsilon: args.epsilon,
        tau: est.tau(),
        algo: args.algo.name().to_string(),
        profile: est.iter().collect(),
        d_hat: est.distinct_estimate,
        s_hat: est.sample_size,
        m,
        warnings: est.warnings.iter().map(ToString::to_string).collect(),
    };
    write_json(args.json_out.as_deref(), &report)?;
    if args.report_memory {
        if let Some(kib) = crate::memory::peak_rss_kib() {
            eprintln!("peak_rss_kib={kib}");
        }
    }
    Ok(())
}

pub fn exact(args: &ExactArgs) -> CliResult<()> {
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let m = StreamReader::new(open_input(&args.input)?, &args.input, args.hash_tokens)
        .for_each(|x| *counts.entry(x).or_insert(0) += 1)?;
    let profile = Profile::from_frequencies(counts.into_values());
    if profile.mass() != m {
        return Err(CliError::Internal(format!("profile mass {} != stream length {m}", profile.mass())));
    }
    let report = ExactReport {
        version: FORMAT_VERSION,
        profile: profile.as_map().clone(),
        distinct: profile.distinct(),
        m,
    };
    write_json(args.json_out.as_deref(), &report)
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    check_epsilon(args.epsilon)?;
    let error_type = parse_error_type(&args.error_type)?;
    let text = std::fs::read_to_string(&args.spec_file).map_err(|e| CliError::io(&args.spec_file, e))?;
    let spec: StreamSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", args.spec_file)))?;
    spec.validate()?;
    let estimator = match args.algo {
        Algo::Sketch => {
            let mut cfg = match error_type {
                ErrorType::D => SketchConfig::error_d(args.epsilon, args.tau.unwrap_or(3), HashSeed(0)),
                ErrorType::M => SketchConfig::error_m(args.epsilon, HashSeed(0)),
            };
            if let Some(tau) = args.tau {
                cfg.tau = tau;
            }
            Estimator::Sketch(cfg)
        }
        Algo::Dm => Estimator::Dm { epsilon: args.epsilon },
        Algo::DmCompressed => Estimator::DmCompressed { epsilon: args.epsilon },
    };
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let thresholds = Thresholds::for_epsilon(args.epsilon);
    let (mut reports, summary) = run_trials(&spec, &estimator, args.trials, args.seed, thresholds)?;
    if args.no_wall_time {
        reports.iter_mut().for_each(|r| r.wall_ms = 0.0);
    }
    if let Some(path) = &args.csv_out {
        let out = open_output(Some(path))?;
        let mut writer = csv::Writer::from_writer(out);
        for r in &reports {
            writer.serialize(r).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        }
        writer.flush().map_err(|e| CliError::io(path, e))?;
    }
    let head_guarantee = match args.algo {
        Algo::Sketch => error_type == ErrorType::D,
        Algo::Dm | Algo::DmCompressed => false,
    };
    let report = CampaignReport::new(
        args.algo.name(),
        &if head_guarantee { ErrorType::D } else { ErrorType::M }.to_string(),
        head_guarantee,
        args.epsilon,
        estimator.tau(),
        args.seed,
        spec,
        summary,
    );
    write_json(args.json_out.as_deref(), &report)
}
