//! Property tests over randomly generated circuits and lock configs.

use latchlock::gen::{generate, GenConfig};
use latchlock::locker::{lock, DecoyStyle, LockConfig};
use latchlock::netlist::{parse_locked, write_locked};
use latchlock::seqgraph;
use latchlock::simplify::propagate_constants;
use proptest::prelude::*;

fn arb_gen_config() -> impl Strategy<Value = GenConfig> {
    (1usize..5, 1usize..4, 2usize..10, 10usize..80, any::<u64>()).prop_map(
        |(pis, pos, ffs, gates, seed)| GenConfig {
            name: "prop".into(),
            n_pis: pis,
            n_pos: pos,
            n_ffs: ffs,
            n_gates: gates,
            seed,
        },
    )
}

fn arb_lock_config() -> impl Strategy<Value = LockConfig> {
    (
        any::<u64>(),
        0.2f64..=1.0,
        0.0f64..1.0,
        0.0f64..1.0,
        prop::sample::subsequence(vec![DecoyStyle::Mux, DecoyStyle::Or, DecoyStyle::Xor], 1..=3),
    )
        .prop_map(|(seed, ff_fraction, dd, ld, styles)| LockConfig {
            seed,
            ff_fraction,
            delay_decoy_rate: dd,
            logic_decoy_rate: ld,
            logic_decoy_styles: styles,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn locked_netlists_round_trip(gc in arb_gen_config(), lc in arb_lock_config()) {
        let base = generate(&gc);
        let (locked, gt, _) = lock(&base, &lc).unwrap();
        let (bench, sidecar) = write_locked(&locked, &gt).unwrap();
        let (reparsed, gt2) = parse_locked(&bench, &sidecar).unwrap();
        prop_assert_eq!(&reparsed, &locked);
        prop_assert_eq!(&gt2, &gt);
    }

    #[test]
    fn feature_ranges_and_degree_partition(gc in arb_gen_config(), lc in arb_lock_config()) {
        let base = generate(&gc);
        let (locked, _, _) = lock(&base, &lc).unwrap();
        let graph = seqgraph::extract_graph(&locked);
        let feats = seqgraph::featurize_with_graph(&locked, &graph);
        for (li, f) in feats.iter().enumerate() {
            let a = f.to_array();
            for frac in [a[0], a[1], a[2], a[3], a[4], a[13]] {
                prop_assert!((0.0..=1.0).contains(&frac), "fraction out of range: {:?}", a);
            }
            prop_assert!(a[5] == 0.0 || a[5] == 1.0);
            prop_assert!(a[6] == 0.0 || a[6] == 1.0);
            let node = graph.latch_nodes[li];
            let in_deg = graph.fanin(node).len() as f64;
            let out_deg = graph.fanout(node).len() as f64;
            prop_assert_eq!(a[7] + a[8] + a[9], in_deg);
            prop_assert_eq!(a[10] + a[11] + a[12], out_deg);
        }
    }

    #[test]
    fn lock_preserves_function_under_truth_key(gc in arb_gen_config(), seed in any::<u64>()) {
        let base = generate(&gc);
        let lc = LockConfig { seed, ..Default::default() };
        let (locked, gt, _) = lock(&base, &lc).unwrap();
        let key = latchlock::eval::KeyAssignment::from_ground_truth(&gt);
        let fc = latchlock::eval::functional_corruptibility(
            &locked,
            &key,
            &base,
            &latchlock::eval::FcConfig { cycles: 30, runs: 2, seed: 7 },
        );
        prop_assert_eq!(fc, 0.0);
    }

    #[test]
    fn propagation_shrinks_and_idempotent(gc in arb_gen_config(), which in any::<u64>()) {
        let mut base = generate(&gc);
        base.flipflops.clear(); // combinational core only
        let gi = (which as usize) % base.gates.len();
        base.gates[gi] = latchlock::netlist::Gate {
            output: base.gates[gi].output,
            kind: latchlock::netlist::GateKind::Const0,
            inputs: vec![],
        };
        let once = propagate_constants(&base);
        prop_assert!(once.gates.len() <= base.gates.len());
        let twice = propagate_constants(&once);
        prop_assert_eq!(&twice, &once);
    }
}
