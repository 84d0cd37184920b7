use hydra_core::lern::{
    build_reuse_signature, extract_features, fit_signature, line_accuracy, per_access_reuse,
    prediction_accuracy, train_layer, ClusterModel, LernParams, RIFeature, RcLabel, RiLabel,
    NO_REUSE,
};
use hydra_core::trace::{AccessSequence, MemoryAccess};
use proptest::prelude::*;

fn reads(addrs: &[u64]) -> Vec<MemoryAccess> {
    addrs
        .iter()
        .enumerate()
        .map(|(i, &a)| MemoryAccess::read(i as u64, 0, a))
        .collect()
}

// a1 a2 a1 a3 a4 a1 a2 a3; a1, a2 share line c1 and a3, a4 share c2
const A: [u64; 8] = [0x40, 0x48, 0x40, 0x80, 0x88, 0x40, 0x48, 0x80];

#[test]
fn worked_example_features() {
    let tr = build_reuse_signature(&reads(&A), 6);
    let (f_ri, f_rc) = extract_features(&tr);
    assert_eq!(f_rc, vec![5, 3]);
    assert_eq!(f_ri, vec![RIFeature([4, 0, 0, 0]), RIFeature([2, 0, 0, 0])]);
    assert_eq!(tr.get(1).unwrap().occurrences, vec![1, 2, 3, 6, 7]);
}

#[test]
fn worked_example_table_rows() {
    // address granularity
    let rows = per_access_reuse(&reads(&A), 0);
    let ri: Vec<i64> = rows.iter().map(|r| r.0).collect();
    let rc: Vec<u64> = rows.iter().map(|r| r.1).collect();
    assert_eq!(ri, vec![2, 5, 3, 4, -1, -1, -1, -1]);
    assert_eq!(rc, vec![1, 1, 2, 1, 1, 3, 2, 2]);
    // line granularity
    let rows = per_access_reuse(&reads(&A), 6);
    let ri: Vec<i64> = rows.iter().map(|r| r.0).collect();
    let rc: Vec<u64> = rows.iter().map(|r| r.1).collect();
    assert_eq!(ri, vec![1, 1, 3, 1, 3, 1, -1, -1]);
    assert_eq!(rc, vec![1, 2, 3, 1, 2, 4, 5, 3]);
}

#[test]
fn accuracy_rule() {
    assert_eq!(line_accuracy(RiLabel::Immediate, &[5, 20, 9, 6, -1]), 0.75);
    assert_eq!(line_accuracy(RiLabel::Near, &[5, 20, 9, 6, -1]), 1.0);
    assert_eq!(line_accuracy(RiLabel::Far, &[5, 20, 9, 6, -1]), 0.25);
    assert_eq!(line_accuracy(RiLabel::Remote, &[5, 20, 9, 6, -1]), 0.0);
}

/// (line, occurrences, intervals) in first-occurrence order, by direct search.
fn brute_signature(addrs: &[u64], block_bits: u32) -> Vec<(u64, Vec<u64>, Vec<i64>)> {
    let lines: Vec<u64> = addrs.iter().map(|a| a >> block_bits).collect();
    let mut out = Vec::new();
    for i in 0..lines.len() {
        if (0..i).any(|j| lines[j] == lines[i]) {
            continue;
        }
        let occ: Vec<u64> = (i..lines.len())
            .filter(|&j| lines[j] == lines[i])
            .map(|j| j as u64 + 1)
            .collect();
        let ivs = occ
            .iter()
            .map(|&p| {
                ((p as usize)..lines.len())
                    .find(|&j| lines[j] == lines[i])
                    .map_or(-1, |j| (j as u64 + 1 - p) as i64)
            })
            .collect();
        out.push((lines[i], occ, ivs));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn signature_matches_brute_force(
        addrs in prop::collection::vec(0u64..(1 << 14), 0..2000),
        block_bits in 0u32..8,
    ) {
        let tr = build_reuse_signature(&reads(&addrs), block_bits);
        let got: Vec<_> = tr
            .iter()
            .map(|l| (l.line, l.rv.occurrences.clone(), l.rv.intervals.clone()))
            .collect();
        prop_assert_eq!(got, brute_signature(&addrs, block_bits));
        prop_assert_eq!(tr.m_total, addrs.len() as u64);
    }

    #[test]
    fn features_partition_intervals(addrs in prop::collection::vec(0u64..4096, 1..1500)) {
        let tr = build_reuse_signature(&reads(&addrs), 6);
        let (f_ri, f_rc) = extract_features(&tr);
        let total: u64 = f_rc.iter().sum();
        prop_assert_eq!(total, addrs.len() as u64);
        for (f, c) in f_ri.iter().zip(&f_rc) {
            prop_assert_eq!(f.total() as u64, c - 1);
        }
    }

    #[test]
    fn model_labels_every_reused_line(
        addrs in prop::collection::vec(0u64..8192, 50..1500),
        seed in any::<u64>(),
    ) {
        let tr = build_reuse_signature(&reads(&addrs), 6);
        let m = fit_signature(&tr, 0, None, seed, &LernParams::default()).unwrap();
        check_model(&m, &tr)?;
    }
}

fn check_model(
    m: &ClusterModel,
    tr: &hydra_core::lern::SignatureTrace,
) -> Result<(), TestCaseError> {
    prop_assert_eq!(m.assignments.len(), tr.n_unique());
    for l in tr.iter() {
        let a = m.assignments[&l.line];
        if l.rv.count() == 1 {
            prop_assert_eq!(a, (NO_REUSE, NO_REUSE));
        } else {
            prop_assert!(m.labels(l.line).is_some());
        }
    }
    // higher counts never get a lower RC label
    let mut by_count: Vec<(usize, RcLabel)> = tr
        .iter()
        .filter_map(|l| m.labels(l.line).map(|(rc, _)| (l.rv.count(), rc)))
        .collect();
    by_count.sort();
    prop_assert!(by_count.windows(2).all(|w| w[0].1 <= w[1].1));
    let acc = prediction_accuracy(tr, m);
    prop_assert!((0.0..=1.0).contains(&acc));
    Ok(())
}

#[test]
fn training_is_seed_deterministic() {
    let acc: Vec<MemoryAccess> = (0..5000u64)
        .map(|i| MemoryAccess::read(i, 0, ((i * 2654435761) % 700) * 64))
        .collect();
    let seq = AccessSequence::new(acc, "mix");
    let a = train_layer(&seq, 0, 6, 11).unwrap();
    let b = train_layer(&seq, 0, 6, 11).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.assignments, b.assignments);
}
