//! CountSketch against exact frequencies.

use bptree_core::countsketch::{CountSketch, CountSketchConfig};
use bptree_core::oracle::ExactStats;
use bptree_core::seed::{self, tag};
use bptree_core::streams::{planted_stream, StreamKind, StreamSpec, HEAVY_ITEM};
use proptest::prelude::*;

proptest! {
    #[test]
    fn table_is_linear(a in prop::collection::vec(0u64..100, 0..200), b in prop::collection::vec(0u64..100, 0..200), seed: u64) {
        let config = CountSketchConfig::new(4, 7);
        let (mut x, mut y, mut xy) = (
            CountSketch::new(config, seed).unwrap(),
            CountSketch::new(config, seed).unwrap(),
            CountSketch::new(config, seed).unwrap(),
        );
        for &i in &a { x.update(i); xy.update(i); }
        for &i in &b { y.update(i); xy.update(i); }
        let sum: Vec<i64> = x.table().iter().zip(y.table()).map(|(p, q)| p + q).collect();
        prop_assert_eq!(sum, xy.table().to_vec());
    }

    #[test]
    fn row_error_is_the_signed_collision_mass(stream in prop::collection::vec(0u64..64, 1..300), seed: u64, probe in 0u64..64) {
        let mut cs = CountSketch::new(CountSketchConfig::new(5, 8), seed).unwrap();
        for &i in &stream { cs.update(i); }
        let stats = ExactStats::from_stream(stream.iter().copied());
        for (t, est) in cs.row_estimates(probe).into_iter().enumerate() {
            let colliding: i64 = (0..64u64)
                .filter(|&j| j != probe && cs.bucket(t, j) == cs.bucket(t, probe))
                .map(|j| cs.sign(t, j) * cs.sign(t, probe) * stats.frequency(j) as i64)
                .sum();
            prop_assert_eq!(est, stats.frequency(probe) as i64 + colliding);
        }
    }
}

#[test]
fn heavy_frequency_estimated_within_ten() {
    let mut ok = 0;
    for t in 0..100u64 {
        let stream = planted_stream(&[100], 1000, t);
        let mut cs = CountSketch::new(
            CountSketchConfig::new(9, 500),
            seed::derive(40, tag::TRIAL, t),
        )
        .unwrap();
        for &i in &stream {
            cs.update(i);
        }
        ok += u32::from((cs.estimate(0) - 100).abs() <= 10);
    }
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn baseline_finds_a_very_heavy_item() {
    let n = 100_000;
    let mut ok = 0;
    for t in 0..100u64 {
        let spec =
            StreamSpec::new(n, 64.0, StreamKind::Start, seed::derive(41, tag::TRIAL, t)).unwrap();
        let mut cs = CountSketch::new(
            CountSketchConfig::baseline(n),
            seed::derive(42, tag::TRIAL, t),
        )
        .unwrap();
        for i in spec.iter() {
            cs.update(i);
        }
        ok += u32::from(cs.top_candidate() == Some(HEAVY_ITEM));
    }
    assert!(ok >= 85, "{ok}/100");
}
