use profile_sketch::harness::{generate_stream, StreamSpec};
use profile_sketch::sketch::BucketEntry;
use profile_sketch::{exact_profile, finalize, ErrorType, HashSeed, ProfileSketch, SketchConfig};
use proptest::prelude::*;

fn sorted_buckets(sk: &ProfileSketch) -> Vec<Vec<(u8, u32, bool)>> {
    sk.array()
        .iter()
        .map(|b| {
            let mut v: Vec<_> = b.iter().map(|e: &BucketEntry| (e.level, e.count, e.saturated)).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

#[test]
fn advancing_matches_starting_at_the_final_level() {
    let spec = StreamSpec::profile([(1, 30_000), (2, 8_000), (3, 3_000), (7, 500)]);
    for seed in 0..5u64 {
        let stream = generate_stream(&spec, seed).unwrap();
        let cfg = SketchConfig::error_d(0.2, 3, HashSeed(seed));
        let mut moving = ProfileSketch::new(cfg.clone()).unwrap();
        moving.extend(stream.iter().copied());
        assert!(moving.level() > 1, "seed {seed}: level never advanced");

        let mut pinned = ProfileSketch::new(SketchConfig {
            fixed_level: Some(moving.level()),
            ..cfg
        })
        .unwrap();
        pinned.extend(stream.iter().copied());
        assert_eq!(sorted_buckets(&moving), sorted_buckets(&pinned), "seed {seed}");
        assert_eq!(finalize(&moving).values, finalize(&pinned).values);
    }
}

#[test]
fn wide_table_recovers_small_profile_closely() {
    // Every element sampled into a table far larger than the sample.
    let spec = StreamSpec::profile([(1, 300), (2, 200), (3, 100)]);
    let stream = generate_stream(&spec, 4).unwrap();
    let mut errors = Vec::new();
    for seed in 0..20 {
        let mut cfg = SketchConfig::with_buckets(0.1, ErrorType::D, 1 << 16, 3, HashSeed(seed));
        cfg.fixed_level = Some(1);
        let mut sk = ProfileSketch::new(cfg).unwrap();
        sk.extend(stream.iter().copied());
        let est = finalize(&sk);
        let exact = exact_profile(&stream);
        let l1: f64 = (1..=3).map(|i| (est.get(i) - exact.get(i) as f64).abs()).sum();
        errors.push(l1 / 600.0);
    }
    errors.sort_by(f64::total_cmp);
    assert!(errors[10] < 0.1, "median relative head error {}", errors[10]);
}

#[test]
fn estimate_is_reproducible() {
    let stream = generate_stream(&StreamSpec::Zipf { alpha: 1.1, support: 10_000, m: 50_000 }, 3).unwrap();
    let run = || {
        let mut sk = ProfileSketch::new(SketchConfig::error_m(0.2, HashSeed(17))).unwrap();
        sk.extend(stream.iter().copied());
        finalize(&sk)
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pinned_state_ignores_arrival_order(ids in prop::collection::vec(0u64..300, 1..400), seed in any::<u64>()) {
        let mut cfg = SketchConfig::with_buckets(0.2, ErrorType::D, 97, 4, HashSeed(seed));
        cfg.fixed_level = Some(2);
        let mut forward = ProfileSketch::new(cfg.clone()).unwrap();
        forward.extend(ids.iter().copied());
        let mut backward = ProfileSketch::new(cfg).unwrap();
        backward.extend(ids.iter().rev().copied());
        prop_assert_eq!(sorted_buckets(&forward), sorted_buckets(&backward));
    }

    #[test]
    fn estimate_is_finite_and_nonnegative(ids in prop::collection::vec(any::<u64>(), 0..2000), seed in any::<u64>()) {
        let mut sk = ProfileSketch::new(SketchConfig::error_d(0.3, 5, HashSeed(seed))).unwrap();
        sk.extend(ids.iter().copied());
        let est = finalize(&sk);
        prop_assert!(est.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!(est.distinct_estimate >= 0.0);
    }
}
