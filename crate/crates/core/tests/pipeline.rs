//! Cross-module integration tests: extraction oracles on locked circuits,
//! locking invariants, pool/key invariants, and CLI-level determinism.

use latchlock::eval::{functional_corruptibility, simulate, FcConfig, KeyAssignment};
use latchlock::experiment::{lock_suite, ExperimentConfig};
use latchlock::gen;
use latchlock::ilp::{build_model, check_feasible, solve_topk, IlpType};
use latchlock::locker::{lock, LockConfig};
use latchlock::netlist::{parse_bench, parse_locked, write_locked, LatchType, Netlist};
use latchlock::seqgraph::{self, extract_graph, extract_graph_bfs_oracle, NodeKind};
use latchlock::simplify;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeSet;

fn locked_suite_sample() -> Vec<(Netlist, latchlock::netlist::GroundTruth)> {
    gen::small_suite()
        .into_iter()
        .take(4)
        .enumerate()
        .map(|(i, c)| {
            let cfg = LockConfig {
                seed: i as u64,
                ..Default::default()
            };
            let (locked, gt, _) = lock(&c, &cfg).unwrap();
            (locked, gt)
        })
        .collect()
}

#[test]
fn extraction_matches_bfs_oracle_on_locked_circuits() {
    for (locked, _) in locked_suite_sample() {
        let g = extract_graph(&locked);
        let oracle = extract_graph_bfs_oracle(&locked);
        assert_eq!(g.edges, oracle, "{}", locked.name);
    }
}

#[test]
fn features_are_permutation_invariant() {
    // Renaming nets and shuffling declaration order must leave every
    // latch's features untouched (latch identity rides on the key slot).
    let (locked, _) = locked_suite_sample().swap_remove(1);
    let before = seqgraph::featurize(&locked);

    let text = latchlock::netlist::write_bench(&locked);
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    // Stable rename: net -> rn<i> by first appearance in a shuffled
    // declaration order.
    let mut lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    for i in (1..lines.len()).rev() {
        lines.swap(i, rng.gen_range(0..=i));
    }
    let shuffled = lines.join("\n");
    let mut renames: std::collections::BTreeMap<String, String> = Default::default();
    let mut fresh = 0usize;
    let mut out = String::new();
    let mut token = String::new();
    for ch in shuffled.chars() {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            token.push(ch);
        } else {
            if !token.is_empty() {
                out.push_str(&map_token(&token, &mut renames, &mut fresh));
                token.clear();
            }
            out.push(ch);
        }
    }
    if !token.is_empty() {
        out.push_str(&map_token(&token, &mut renames, &mut fresh));
    }

    let renamed = parse_bench(&out).unwrap();
    let after = seqgraph::featurize(&renamed);
    assert_eq!(before.len(), after.len());
    // Latch id == key slot order in both parses.
    for (a, b) in before.iter().zip(&after) {
        assert_eq!(a.to_array(), b.to_array());
    }
}

fn map_token(
    token: &str,
    renames: &mut std::collections::BTreeMap<String, String>,
    fresh: &mut usize,
) -> String {
    const KEYWORDS: [&str; 16] = [
        "INPUT", "OUTPUT", "DFF", "LATCH", "AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT",
        "BUF", "MUX", "CONST0", "CONST1", "name",
    ];
    if KEYWORDS.contains(&token) || token.starts_with('K') && token[1..].parse::<u32>().is_ok() {
        return token.to_string();
    }
    renames
        .entry(token.to_string())
        .or_insert_with(|| {
            *fresh += 1;
            format!("rn{fresh}")
        })
        .clone()
}

#[test]
fn locked_file_round_trip_and_key_count() {
    let suite = gen::small_suite();
    let s298_scale = &suite[3];
    assert_eq!(s298_scale.flipflops.len(), 14);
    let (locked, gt, manifest) = lock(s298_scale, &LockConfig::default()).unwrap();
    assert_eq!(locked.latches.len(), manifest.n_keys / 2);
    let (bench, sidecar) = write_locked(&locked, &gt).unwrap();
    let (reparsed, gt2) = parse_locked(&bench, &sidecar).unwrap();
    assert_eq!(reparsed, locked);
    assert_eq!(gt2, gt);
}

#[test]
fn ground_truth_subgraph_alternates_through_delay_decoys() {
    // After removing true logic decoys, walking from any P/S latch through
    // delay-decoy-only paths must land on the opposite type, and every
    // PO/FF-adjacent non-decoy latch must be secondary.
    for (locked, gt) in locked_suite_sample() {
        let true_ld: BTreeSet<u32> = gt
            .types
            .iter()
            .filter(|(_, &t)| t == LatchType::LogicDecoy)
            .map(|(&id, _)| id)
            .collect();
        let (simp, graph, _) = simplify::simplify_for_phase2(&locked, &true_ld).unwrap();
        let ty_of = |latch_id: u32| gt.get(simp.latches[latch_id as usize].key_index).unwrap();

        let mut latch_succ: Vec<Vec<u32>> = vec![Vec::new(); simp.latches.len()];
        let mut po_adjacent = vec![false; simp.latches.len()];
        for &(u, v) in &graph.edges {
            match (graph.nodes[u].kind, graph.nodes[v].kind) {
                (NodeKind::Latch, NodeKind::Latch) => {
                    latch_succ[graph.nodes[u].latch_id as usize].push(graph.nodes[v].latch_id);
                }
                (NodeKind::Latch, NodeKind::Po) | (NodeKind::Latch, NodeKind::Ff) => {
                    po_adjacent[graph.nodes[u].latch_id as usize] = true;
                }
                _ => {}
            }
        }
        for start in 0..simp.latches.len() as u32 {
            let start_ty = ty_of(start);
            if start_ty == LatchType::DelayDecoy {
                continue;
            }
            if po_adjacent[start as usize] {
                assert_eq!(start_ty, LatchType::Secondary, "{}", locked.name);
            }
            // BFS through DD-only intermediates.
            let mut stack: Vec<u32> = latch_succ[start as usize].clone();
            let mut seen = BTreeSet::new();
            while let Some(at) = stack.pop() {
                if !seen.insert(at) {
                    continue;
                }
                match ty_of(at) {
                    LatchType::DelayDecoy => stack.extend(latch_succ[at as usize].iter()),
                    other => assert_ne!(
                        other, start_ty,
                        "{}: same-type latches joined by a decoy-only path",
                        locked.name
                    ),
                }
            }
        }
    }
}

#[test]
fn pool_entries_feasible_monotone_and_best_covers_t1() {
    let mut rng = ChaCha20Rng::seed_from_u64(4242);
    for _ in 0..8 {
        let n = rng.gen_range(3..7);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.gen_ratio(1, 3) {
                    edges.push((i, j));
                }
            }
        }
        let nodes = (0..n)
            .map(|i| seqgraph::SeqNode {
                kind: NodeKind::Latch,
                name: format!("l{i}"),
                latch_id: i as u32,
            })
            .collect();
        let graph = seqgraph::SequentialGraph::new(nodes, edges);
        let probs: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let a: f64 = rng.gen();
                let b: f64 = rng.gen();
                let c: f64 = rng.gen();
                let s = a + b + c;
                [a / s, b / s, c / s]
            })
            .collect();
        let model = build_model(&graph, &probs).unwrap();
        let pool = solve_topk(&model, 12);
        assert!(!pool.entries.is_empty(), "all-DD is always feasible");
        for e in &pool.entries {
            let (ok, viol) = check_feasible(&model, &e.assignment);
            assert!(ok, "pool entry violates {viol:?}");
        }
        for w in pool.entries.windows(2) {
            assert!(w[0].objective >= w[1].objective);
            assert_ne!(w[0].assignment.types, w[1].assignment.types);
        }
    }
}

#[test]
fn mis_keyed_logic_decoy_corrupts_output() {
    // Crafted 2-latch circuit: the decoy taps a toggling net, so keying it
    // DELAY leaks the toggle into the PO trace.
    let text = "\
INPUT(a)
OUTPUT(z)
p = LATCH(tog, K0)
ld = LATCH(tog, K1)
tog = NOT(p)
z = OR(p, ld)
";
    let n = parse_bench(text).unwrap();
    let correct = KeyAssignment {
        types: vec![LatchType::Primary, LatchType::LogicDecoy],
    };
    let flipped = KeyAssignment {
        types: vec![LatchType::Primary, LatchType::DelayDecoy],
    };
    let inputs: Vec<Vec<bool>> = (0..6).map(|_| vec![false]).collect();
    let a = simulate(&n, &correct, &inputs);
    let b = simulate(&n, &flipped, &inputs);
    assert_ne!(a.trace, b.trace);
}

#[test]
fn random_keys_corrupt_s298_scale_circuit() {
    let suite = gen::small_suite();
    let (locked, _gt, _) = lock(&suite[3], &LockConfig::default()).unwrap();
    let mut corrupted = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = KeyAssignment {
            types: (0..locked.latches.len())
                .map(|_| LatchType::ALL[rng.gen_range(0..4)])
                .collect(),
        };
        let fc = functional_corruptibility(
            &locked,
            &key,
            &suite[3],
            &FcConfig {
                cycles: 50,
                runs: 2,
                seed,
            },
        );
        if fc > 0.0 {
            corrupted += 1;
        }
    }
    assert!(corrupted >= 9, "random keys must corrupt: {corrupted}/10");
}

#[test]
fn all_zero_inputs_after_reset_match_original() {
    let suite = gen::small_suite();
    let (locked, gt, _) = lock(&suite[0], &LockConfig::default()).unwrap();
    let key = KeyAssignment::from_ground_truth(&gt);
    let inputs = vec![vec![false; suite[0].inputs.len()]];
    let a = simulate(&suite[0], &KeyAssignment { types: vec![] }, &inputs);
    let b = simulate(&locked, &key, &inputs);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn best_of_pool_at_least_t1_on_experiment_rows() {
    let suite: Vec<Netlist> = gen::small_suite().into_iter().take(5).collect();
    let cfg = ExperimentConfig {
        variants: 2,
        topk: 50,
        ..Default::default()
    };
    let report = latchlock::experiment::run_experiment(&suite, &cfg).unwrap();
    for r in &report.rows {
        assert!(r.topk_acc >= r.t1_acc, "{}#{}", r.circuit, r.variant);
        assert!(r.gt_feasible, "{}#{}", r.circuit, r.variant);
    }
}

#[test]
fn no_good_cross_check_on_locked_instance() {
    // The iterative no-good mode and the pooled search agree on a real
    // phase-2 model built from a locked circuit.
    let (locked, gt) = locked_suite_sample().swap_remove(0);
    let true_ld: BTreeSet<u32> = gt
        .types
        .iter()
        .filter(|(_, &t)| t == LatchType::LogicDecoy)
        .map(|(&id, _)| id)
        .collect();
    let (simp, graph, _) = simplify::simplify_for_phase2(&locked, &true_ld).unwrap();
    let n = simp.latches.len();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let probs: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let c: f64 = rng.gen();
            let s = a + b + c;
            [a / s, b / s, c / s]
        })
        .collect();
    let model = build_model(&graph, &probs).unwrap();
    let a = solve_topk(&model, 5);
    let b = latchlock::ilp::solve_topk_nogood(&model, 5);
    assert_eq!(a.entries.len(), b.entries.len());
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert_eq!(x.objective, y.objective);
        assert_eq!(x.assignment.types, y.assignment.types);
    }
}

#[test]
fn degenerate_isolated_latch_follows_classifier() {
    // No edges, no boundary: only F0-F2 constrain the latch, so the top
    // assignment is the per-latch argmax.
    let nodes = vec![seqgraph::SeqNode {
        kind: NodeKind::Latch,
        name: "l0".into(),
        latch_id: 0,
    }];
    let graph = seqgraph::SequentialGraph::new(nodes, vec![]);
    let model = build_model(&graph, &[[0.2, 0.3, 0.5]]).unwrap();
    let pool = solve_topk(&model, 1);
    assert_eq!(pool.entries[0].assignment.types, vec![IlpType::DelayDecoy]);
}

#[test]
fn cli_experiment_is_byte_deterministic() {
    let bin = env!("CARGO_BIN_EXE_latchlock");
    let dir = tempfile::tempdir().unwrap();
    let run_file = dir.path().join("run.txt");
    std::fs::write(
        &run_file,
        "suite = small\nvariants = 2\ntopk = 50\nlevel = 2\nfc.cycles = 20\nfc.runs = 2\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    for pass in 0..2 {
        let out = dir.path().join(format!("out{pass}"));
        let status = std::process::Command::new(bin)
            .args([
                "experiment",
                "--run-file",
                run_file.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        reports.push(std::fs::read(out.join("report.tsv")).unwrap());
    }
    assert_eq!(reports[0], reports[1], "report.tsv must be byte-identical");
}

#[test]
fn bundled_benchmarks_match_builtin_suite() {
    // The checked-in benchmarks/ directory is the serialized form of
    // `gen::small_suite()`; this keeps the files honest.
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks");
    for c in gen::small_suite() {
        let path = root.join(format!("{}.bench", c.name));
        let on_disk = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            on_disk,
            latchlock::netlist::write_bench(&c),
            "{} is out of sync with the generator",
            path.display()
        );
    }
}

#[test]
fn phase1_importance_ranks_fanout_delay_top3() {
    // Qualitative check of the importance analysis: the logic-decoy
    // detector leans on max fan-out delay (alongside triangle-family and
    // degree features).
    let suite = gen::small_suite();
    let cfg = ExperimentConfig::default();
    let variants = lock_suite(&suite, &cfg).unwrap();
    let models = latchlock::experiment::train_for_held_out(&variants, 0, &cfg).unwrap();
    let imp = models.phase1.feature_importance();
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let mut ranked: Vec<usize> = (0..imp.len()).collect();
    ranked.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]));
    let fanout_delay = seqgraph::FEATURE_NAMES
        .iter()
        .position(|&n| n == "max_fanout_delay")
        .unwrap();
    assert!(
        ranked[..3].contains(&fanout_delay),
        "max_fanout_delay not in top-3: {ranked:?} ({imp:?})"
    );
}

#[test]
fn cli_train_attack_evaluate_ablation_flow() {
    let bin = env!("CARGO_BIN_EXE_latchlock");
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = std::process::Command::new(bin).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    // Training circuits: two suite members; target: s27.
    let suite = gen::small_suite();
    for c in [&suite[1], &suite[2]] {
        std::fs::write(
            dir.path().join(format!("{}.bench", c.name)),
            latchlock::netlist::write_bench(c),
        )
        .unwrap();
    }
    std::fs::write(dir.path().join("s27.bench"), gen::S27_BENCH).unwrap();

    let mut p1_rows = String::new();
    let mut p2_rows = String::new();
    let mut b4_rows = String::new();
    for name in ["gen01", "gen02"] {
        for seed in 0..4 {
            run(&[
                "lock",
                "--in",
                &p(&format!("{name}.bench")),
                "--out",
                &p(""),
                "--seed",
                &seed.to_string(),
            ]);
            let locked = p(&format!("{name}_locked_s{seed}.bench"));
            let truth = p(&format!("{name}_locked_s{seed}.truth"));
            let rows = p(&format!("{name}_{seed}_rows.tsv"));
            run(&[
                "extract-features",
                "--in",
                &locked,
                "--truth",
                &truth,
                "--out",
                &rows,
            ]);
            p1_rows.push_str(&std::fs::read_to_string(&rows).unwrap());
            b4_rows.push_str(&std::fs::read_to_string(&rows).unwrap());
            let srows = p(&format!("{name}_{seed}_simplified.tsv"));
            run(&[
                "extract-features",
                "--in",
                &locked,
                "--truth",
                &truth,
                "--out",
                &srows,
                "--simplified",
            ]);
            p2_rows.push_str(&std::fs::read_to_string(&srows).unwrap());
        }
    }
    std::fs::write(dir.path().join("p1.tsv"), &p1_rows).unwrap();
    std::fs::write(dir.path().join("p2.tsv"), &p2_rows).unwrap();
    std::fs::write(dir.path().join("b4.tsv"), &b4_rows).unwrap();

    run(&["train", "--rows", &p("p1.tsv"), "--scheme", "ld_vs_rest", "--model-out", &p("p1.model")]);
    run(&["train", "--rows", &p("p2.tsv"), "--scheme", "dd_vs_ps", "--model-out", &p("p2.model")]);
    run(&["train", "--rows", &p("b4.tsv"), "--scheme", "four_class", "--model-out", &p("b4.model")]);

    run(&["lock", "--in", &p("s27.bench"), "--out", &p(""), "--seed", "9"]);
    let out = run(&[
        "attack",
        "--locked",
        &p("s27_locked_s9.bench"),
        "--truth",
        &p("s27_locked_s9.truth"),
        "--phase1",
        &p("p1.model"),
        "--phase2",
        &p("p2.model"),
        "--topk",
        "200",
        "--original",
        &p("s27.bench"),
        "--out",
        &p("attack_out"),
    ]);
    assert!(out.contains("best_accuracy"));
    assert!(std::path::Path::new(&p("attack_out/keys.txt")).exists());

    let out = run(&[
        "evaluate",
        "--locked",
        &p("s27_locked_s9.bench"),
        "--truth",
        &p("s27_locked_s9.truth"),
        "--keys",
        &p("attack_out/keys.txt"),
        "--original",
        &p("s27.bench"),
        "--cycles",
        "20",
        "--runs",
        "2",
    ]);
    assert!(out.contains("best_accuracy"));
    assert!(out.contains("fc_best"));

    let out = run(&[
        "ablation",
        "--locked",
        &p("s27_locked_s9.bench"),
        "--truth",
        &p("s27_locked_s9.truth"),
        "--phase1",
        &p("p1.model"),
        "--phase2",
        &p("p2.model"),
        "--baseline",
        &p("b4.model"),
        "--topk",
        "200",
    ]);
    assert!(out.contains("two_phase_topk"));
    assert!(out.contains("closest_keys_topk"));
    assert!(out.contains("single_phase_topk"));
    assert!(out.contains("baseline_argmax"));
}

#[test]
fn cli_lock_then_attack_round_trip() {
    let bin = env!("CARGO_BIN_EXE_latchlock");
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("s27.bench");
    std::fs::write(&bench, gen::S27_BENCH).unwrap();
    // lock
    let status = std::process::Command::new(bin)
        .args([
            "lock",
            "--in",
            bench.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            "3",
        ])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    // extract features from the locked artifact
    let locked = dir.path().join("s27_locked_s3.bench");
    let truth = dir.path().join("s27_locked_s3.truth");
    let rows = dir.path().join("rows.tsv");
    let status = std::process::Command::new(bin)
        .args([
            "extract-features",
            "--in",
            locked.to_str().unwrap(),
            "--truth",
            truth.to_str().unwrap(),
            "--out",
            rows.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&rows).unwrap();
    let (reparsed, gt) = parse_locked(
        &std::fs::read_to_string(&locked).unwrap(),
        &std::fs::read_to_string(&truth).unwrap(),
    )
    .unwrap();
    assert_eq!(text.lines().count(), reparsed.latches.len());
    assert_eq!(gt.types.len(), reparsed.latches.len());
}
