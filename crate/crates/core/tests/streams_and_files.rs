//! Generated streams and stream files.

use std::collections::HashMap;

use bptree_core::error::StreamError;
use bptree_core::streams::{self, StreamKind, StreamSpec, HEAVY_ITEM};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = StreamKind> {
    prop::sample::select(StreamKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn every_kind_has_the_same_multiset(n in 1u64..3000, alpha in 0.5f64..8.0, kind in kind(), seed: u64) {
        let spec = StreamSpec::new(n, alpha, kind, seed).unwrap();
        let items = spec.to_vec();
        prop_assert_eq!(items.len() as u64, spec.len());
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for &i in &items {
            *counts.entry(i).or_default() += 1;
        }
        prop_assert_eq!(counts[&HEAVY_ITEM], spec.heavy_frequency());
        prop_assert_eq!(counts.len() as u64, n + 1);
        prop_assert!((1..=n).all(|i| counts.get(&i) == Some(&1)));
        let f2: u128 = counts.values().map(|&c| (c as u128) * (c as u128)).sum();
        prop_assert_eq!(f2, spec.f2());
    }

    #[test]
    fn files_round_trip(items in prop::collection::vec(any::<u64>(), 0..500)) {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("s.bin");
        let txt = dir.path().join("s.txt");
        streams::write_binary(&bin, items.iter().copied()).unwrap();
        streams::write_text(&txt, items.iter().copied()).unwrap();
        prop_assert_eq!(&streams::read_binary(&bin).unwrap(), &items);
        prop_assert_eq!(&streams::read_text(&txt).unwrap(), &items);
    }
}

#[test]
fn heavy_placement_by_kind() {
    let n = 10_000;
    let start = StreamSpec::new(n, 2.0, StreamKind::Start, 1)
        .unwrap()
        .to_vec();
    let f = StreamSpec::new(n, 2.0, StreamKind::Start, 1)
        .unwrap()
        .heavy_frequency() as usize;
    assert!(start[..f].iter().all(|&i| i == HEAVY_ITEM));
    let end = StreamSpec::new(n, 2.0, StreamKind::End, 1)
        .unwrap()
        .to_vec();
    assert!(end[end.len() - f..].iter().all(|&i| i == HEAVY_ITEM));
    let spec = StreamSpec::new(n, 2.0, StreamKind::Blocks, 1).unwrap();
    let blocks = spec.to_vec();
    let run = spec.block_size() as usize;
    // Every heavy run is a whole block, except possibly the last.
    let mut runs = Vec::new();
    let mut current = 0;
    for &i in &blocks {
        if i == HEAVY_ITEM {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    assert!(runs.iter().all(|&r| r % run == 0 || r == f % run));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = streams::read_binary(&dir.path().join("absent")).unwrap_err();
    assert!(matches!(err, StreamError::Io { .. }));
}

#[test]
fn malformed_files_report_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("short.bin");
    std::fs::write(&bin, [0u8; 19]).unwrap();
    match streams::read_binary(&bin).unwrap_err() {
        StreamError::Malformed { offset, .. } => assert_eq!(offset, 16),
        other => panic!("{other}"),
    }
    let txt = dir.path().join("bad.txt");
    std::fs::write(&txt, "12\n\n7\nx9\n").unwrap();
    match streams::read_text(&txt).unwrap_err() {
        StreamError::Malformed { offset, .. } => assert_eq!(offset, 6),
        other => panic!("{other}"),
    }
}
