use std::collections::{BTreeMap, HashSet};

use ndpnn_core::dataset::{
    distribution_report, stratified_resplit, synth_dataset, DatasetManifest, ManifestEntry,
    SizeBins, Split, SynthSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_manifest(seed: u64, n: usize, classes: usize) -> DatasetManifest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..n)
        .map(|i| {
            // skewed class draw
            let label = (rng.gen_range(0.0f64..1.0).powi(2) * classes as f64) as usize;
            let h = rng.gen_range(418..=973);
            ManifestEntry {
                id: format!("id{i}"),
                path: format!("{i}.png").into(),
                label: format!("c{label}"),
                height: h,
                width: h,
                // skewed initial split: late classes mostly in train
                split: if rng.gen_bool(if label + 1 == classes { 0.98 } else { 0.7 }) {
                    Split::Train
                } else {
                    Split::Test
                },
            }
        })
        .collect();
    DatasetManifest::new(entries).unwrap()
}

fn bins() -> SizeBins {
    SizeBins::new(418.0, 973.0, 8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resplit_is_a_distribution_matched_partition(
        seed in any::<u64>(),
        n in 50usize..600,
        classes in 1usize..6,
        ratio in 0.5f64..0.95,
    ) {
        let m = random_manifest(seed, n, classes);
        let b = bins();
        let (r, _) = stratified_resplit(&m, ratio, &b, seed).unwrap();
        // partition: same ids, each exactly once
        let before: HashSet<_> = m.entries.iter().map(|e| &e.id).collect();
        let after: HashSet<_> = r.entries.iter().map(|e| &e.id).collect();
        prop_assert_eq!(before, after);
        prop_assert_eq!(r.len(), m.len());
        let train = r.split(Split::Train).count();
        prop_assert_eq!(train, (n as f64 * ratio).round() as usize);

        let mut cells: BTreeMap<(String, usize), (usize, usize)> = BTreeMap::new();
        for e in &r.entries {
            let c = cells.entry((e.label.clone(), b.bin_of(e.height))).or_default();
            c.0 += 1;
            if e.split == Split::Train {
                c.1 += 1;
            }
        }
        for (n_cell, t_cell) in cells.values() {
            if *n_cell >= 10 {
                let global = *n_cell as f64 / n as f64;
                let local = *t_cell as f64 / train as f64;
                prop_assert!((global - local).abs() <= 0.05);
            }
        }
        let (again, _) = stratified_resplit(&m, ratio, &b, seed).unwrap();
        prop_assert_eq!(again, r);
    }
}

#[test]
fn skewed_split_is_rebalanced() {
    let m = random_manifest(42, 4000, 8);
    let before = distribution_report(&m, &bins()).unwrap();
    let gap = |r: &ndpnn_core::dataset::DistributionReport| {
        r.get(Split::Train)
            .class_frequency
            .iter()
            .zip(&r.get(Split::Test).class_frequency)
            .fold(0.0f64, |g, (a, b)| g.max((a - b).abs()))
    };
    assert!(gap(&before) > 0.02);
    let (r, _) = stratified_resplit(&m, 0.9, &bins(), 7).unwrap();
    let after = distribution_report(&r, &bins()).unwrap();
    assert!(gap(&after) <= 0.01, "{}", after.to_text());
}

#[test]
fn two_class_half_split() {
    let entries = (0..40)
        .map(|i| ManifestEntry {
            id: format!("{i}"),
            path: "x.png".into(),
            label: format!("c{}", i % 2),
            height: 500,
            width: 500,
            split: Split::Train,
        })
        .collect();
    let m = DatasetManifest::new(entries).unwrap();
    let (r, _) = stratified_resplit(&m, 0.5, &bins(), 0).unwrap();
    let rep = distribution_report(&r, &bins()).unwrap();
    assert_eq!(rep.get(Split::Train).class_frequency, vec![0.5, 0.5]);
    assert_eq!(rep.get(Split::Test).class_frequency, vec![0.5, 0.5]);
}

#[test]
fn synthetic_variable_size_set_resplits_into_both_splits() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        classes: 2,
        count: 400,
        min_size: 418,
        max_size: 973,
        seed: 1,
    };
    let m = synth_dataset(&spec, dir.path()).unwrap();
    assert_eq!(m.len(), 400);
    assert!(m.entries.iter().all(|e| (418..=973).contains(&e.height)));
    let reloaded = DatasetManifest::load(&dir.path().join("manifest.csv")).unwrap();
    assert_eq!(reloaded, m);
    let (r, _) = stratified_resplit(&m, 0.9, &bins(), 1).unwrap();
    let rep = distribution_report(&r, &bins()).unwrap();
    assert_eq!(rep.get(Split::Train).total, 360);
    assert_eq!(rep.get(Split::Test).total, 40);
    for s in Split::ALL {
        assert_eq!(rep.get(s).class_frequency, vec![0.5, 0.5]);
    }
}
