use hydra_core::trace::{
    generate_core_trace, generate_systolic_trace, parse_trace, write_trace, AcceleratorSpec,
    AccessKind, AccessSequence, CoreProfile, Dataflow, LayerMark, LayerSpec, MemoryAccess,
    TraceFormat,
};
use proptest::prelude::*;

fn arb_sequence() -> impl Strategy<Value = AccessSequence> {
    prop::collection::vec((0u64..50, any::<u8>(), any::<u64>(), any::<bool>(), any::<u64>()), 0..300)
        .prop_flat_map(|raw| {
            let n = raw.len();
            (Just(raw), prop::collection::btree_set(0..n.max(1), 0..4))
        })
        .prop_map(|(raw, cuts)| {
            let mut ts = 0;
            let accesses = raw
                .into_iter()
                .map(|(dt, req, addr, w, tag)| {
                    ts += dt;
                    let a = if w {
                        MemoryAccess::write(ts, req, addr)
                    } else {
                        MemoryAccess::read(ts, req, addr)
                    };
                    a.with_tag(tag)
                })
                .collect::<Vec<_>>();
            let mut seq = AccessSequence::new(accesses, "arb");
            if !seq.accesses.is_empty() {
                let mut cuts: Vec<usize> = cuts.into_iter().collect();
                if cuts.first() != Some(&0) {
                    cuts.insert(0, 0);
                }
                seq.layer_marks = cuts
                    .into_iter()
                    .enumerate()
                    .map(|(i, position)| LayerMark { position, layer_id: i as u32 })
                    .collect();
            }
            seq
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn both_formats_round_trip(seq in arb_sequence()) {
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("t.csv", TraceFormat::Csv), ("t.bin", TraceFormat::Binary)] {
            let p = dir.path().join(name);
            write_trace(&seq, &p, fmt).unwrap();
            let back = parse_trace(&p, fmt).unwrap();
            prop_assert_eq!(&back.accesses, &seq.accesses);
            prop_assert_eq!(&back.layer_marks, &seq.layer_marks);
        }
    }
}

fn hit_rate(seq: &AccessSequence, lines: usize) -> f64 {
    // fully associative LRU of `lines` blocks
    let mut lru: Vec<u64> = Vec::new();
    let mut hits = 0;
    for a in &seq.accesses {
        let b = a.address >> 6;
        if let Some(i) = lru.iter().position(|&x| x == b) {
            lru.remove(i);
            hits += 1;
        } else if lru.len() == lines {
            lru.remove(0);
        }
        lru.push(b);
    }
    hits as f64 / seq.len() as f64
}

#[test]
fn core_profiles_differ_in_locality() {
    // 512 lines = 32 KiB private, 2048 lines = 128 KiB LLC
    let ci = generate_core_trace(CoreProfile::CI, 20_000, 16 << 10, 1).unwrap();
    let li = generate_core_trace(CoreProfile::LI, 20_000, 48 << 10, 1).unwrap();
    let mi = generate_core_trace(CoreProfile::MI, 20_000, 4 << 20, 1).unwrap();
    // CI fits the private cache; LI needs an LLC-sized cache; MI gains nothing from one
    let gain = |t| hit_rate(t, 2048) - hit_rate(t, 512);
    let c = hit_rate(&ci, 512);
    assert!(c > 0.95, "{c}");
    let (l, m) = (gain(&li), gain(&mi));
    assert!(l > 0.2 && m < 0.02, "LI gain {l} MI gain {m}");
    for t in [&ci, &li, &mi] {
        t.validate().unwrap();
        assert!(t.accesses.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }
}

#[test]
fn systolic_trace_is_well_formed() {
    let layer = |df| LayerSpec {
        ifmap_h: 10,
        ifmap_w: 10,
        filt_h: 3,
        filt_w: 3,
        channels: 6,
        num_filters: 12,
        stride: 1,
        dataflow: df,
    };
    let spec = AcceleratorSpec {
        pe_rows: 8,
        pe_cols: 8,
        sram_ifmap_kb: 16,
        sram_ofmap_kb: 16,
        sram_filter_kb: 16,
        word_bytes: 4,
        layers: vec![layer(Dataflow::OS), layer(Dataflow::WS), layer(Dataflow::IS)],
    };
    let seq = generate_systolic_trace(&spec, 0).unwrap();
    seq.validate().unwrap();
    assert_eq!(seq.layer_ids(), vec![0, 1, 2]);
    assert!(seq.layer_marks.windows(2).all(|w| w[0].position < w[1].position));
    for l in 0..3 {
        let s = seq.layer_slice(l).unwrap();
        assert!(s.iter().any(|a| a.kind == AccessKind::Write));
        assert!(s.iter().any(|a| a.kind == AccessKind::Read));
    }
    assert_eq!(seq, generate_systolic_trace(&spec, 0).unwrap());
}
