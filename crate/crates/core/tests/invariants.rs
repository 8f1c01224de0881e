use breakrisk_core::ingest::{ingest, write_spans, IngestConfig, OpMapping, SpanFormat};
use breakrisk_core::msp::Snapshot;
use breakrisk_core::risk::{risk, sweep_single_ops, BreakingSet, RiskMode};
use breakrisk_core::sim::{
    builtin_fixture, generate_traces, random_breaking_set, random_snapshot, FixtureId,
    RandomBounds, TopologySpec,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_bounds() -> RandomBounds {
    RandomBounds {
        max_count: 500,
        ..RandomBounds::default()
    }
}

fn case(seed: u64) -> (Snapshot, BreakingSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_snapshot(&mut rng, small_bounds());
    let set = random_breaking_set(&mut rng, &s);
    (s, set)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scaling_traffic_keeps_affected_paths_score(seed in any::<u64>()) {
        let (s, set) = case(seed);
        let doubled = s.merge(&s).unwrap();
        prop_assert_eq!(doubled.grand_total(), 2 * s.grand_total());
        let a = risk(&s, &set, RiskMode::AffectedPaths).unwrap().total;
        let b = risk(&doubled, &set, RiskMode::AffectedPaths).unwrap().total;
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn removing_an_operation_never_raises_risk(seed in any::<u64>()) {
        let (s, set) = case(seed);
        for op in set.iter() {
            let mut smaller = set.clone();
            smaller.remove(op);
            for mode in RiskMode::ALL {
                prop_assert!(risk(&s, &smaller, mode).unwrap().total <= risk(&s, &set, mode).unwrap().total);
            }
        }
    }

    #[test]
    fn sweep_covers_every_operation_in_order(seed in any::<u64>()) {
        let (s, _) = case(seed);
        for mode in RiskMode::ALL {
            let sweep = sweep_single_ops(&s, mode).unwrap();
            prop_assert_eq!(sweep.len(), s.operations().len());
            prop_assert!(sweep.windows(2).all(|w| w[0].score >= w[1].score));
        }
    }

    #[test]
    fn merge_is_commutative(a in any::<u64>(), b in any::<u64>()) {
        let (x, _) = case(a);
        let (y, _) = case(b);
        let xy = x.merge(&y).unwrap();
        let yx = y.merge(&x).unwrap();
        prop_assert_eq!(xy.grand_total(), yx.grand_total());
        let set = BreakingSet::new(x.operations());
        for mode in RiskMode::ALL {
            prop_assert_eq!(risk(&xy, &set, mode).unwrap().total, risk(&yx, &set, mode).unwrap().total);
        }
    }
}

#[test]
fn ingest_matches_fixtures_through_both_export_formats() {
    for id in FixtureId::ALL {
        let fixture = builtin_fixture(id);
        let spec = TopologySpec::from_snapshot(&fixture, 11);
        let spans = generate_traces(&spec, spec.requests_per_replay().unwrap()).unwrap();
        let cfg = IngestConfig {
            mapping: OpMapping::Bare,
            ..Default::default()
        }
        .with_path_ids_from(&fixture);
        for format in [SpanFormat::OtlpJson, SpanFormat::Jsonl] {
            let text = write_spans(&spans, format);
            let (snapshot, report) = ingest([(text.as_bytes(), format)], &cfg).unwrap();
            assert_eq!(snapshot, fixture, "{id} via {format:?}");
            assert_eq!(report.increments, fixture.grand_total());
            assert_eq!(report.dropped, 0);
        }
    }
}

#[test]
fn ingesting_several_replays_scales_counts() {
    let fixture = builtin_fixture(FixtureId::Mce0);
    let spec = TopologySpec::from_snapshot(&fixture, 3);
    let per_replay = spec.requests_per_replay().unwrap();
    let spans = generate_traces(&spec, 3 * per_replay).unwrap();
    let text = write_spans(&spans, SpanFormat::Jsonl);
    let cfg = IngestConfig {
        mapping: OpMapping::Bare,
        ..Default::default()
    };
    let (snapshot, _) = ingest([(text.as_bytes(), SpanFormat::Jsonl)], &cfg).unwrap();
    assert_eq!(snapshot.grand_total(), 3 * fixture.grand_total());
    let set = BreakingSet::from_labels(["OPE1"]).unwrap();
    for mode in RiskMode::ALL {
        assert_eq!(
            risk(&snapshot, &set, mode).unwrap().to_json(),
            risk(&fixture, &set, mode).unwrap().to_json()
        );
    }
}

#[test]
fn split_windows_merge_back_to_the_whole() {
    let fixture = builtin_fixture(FixtureId::Mce1);
    let spec = TopologySpec::from_snapshot(&fixture, 5);
    let spans = generate_traces(&spec, 2 * spec.requests_per_replay().unwrap()).unwrap();
    let (first, second): (Vec<_>, Vec<_>) =
        spans.into_iter().partition(|s| s.trace_id < "8".repeat(32));
    let cfg = IngestConfig {
        mapping: OpMapping::Bare,
        ..Default::default()
    }
    .with_path_ids_from(&fixture);
    let a = write_spans(&first, SpanFormat::Jsonl);
    let b = write_spans(&second, SpanFormat::OtlpJson);
    let (whole, _) = ingest(
        [
            (a.as_bytes(), SpanFormat::Jsonl),
            (b.as_bytes(), SpanFormat::OtlpJson),
        ],
        &cfg,
    )
    .unwrap();
    let (left, _) = ingest([(a.as_bytes(), SpanFormat::Jsonl)], &cfg).unwrap();
    let (right, _) = ingest([(b.as_bytes(), SpanFormat::OtlpJson)], &cfg).unwrap();
    assert_eq!(left.merge(&right).unwrap(), whole);
    assert_eq!(whole.grand_total(), 2 * fixture.grand_total());
}
