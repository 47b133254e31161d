//! Seeded synthetic benchmark circuits.
//!
//! The experiment suite needs a pool of sequential circuits. Alongside the
//! classic s27 we generate deterministic random circuits: gates are created
//! in topological order (so the combinational part is a DAG by
//! construction), flip-flop data inputs close sequential loops, and primary
//! outputs prefer otherwise-unused nets to keep dead logic small.

use crate::netlist::{FlipFlop, Gate, GateKind, Netlist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// ISCAS'89 s27: 4 PIs, 1 PO, 3 FFs, 10 gates.
pub const S27_BENCH: &str = "\
# name: s27
INPUT(G0)
INPUT(G1)
INPUT(G2)
INPUT(G3)
OUTPUT(G17)
G5 = DFF(G10)
G6 = DFF(G11)
G7 = DFF(G13)
G14 = NOT(G0)
G17 = NOT(G11)
G8 = AND(G14, G6)
G15 = OR(G12, G8)
G16 = OR(G3, G8)
G9 = NAND(G16, G15)
G10 = NOR(G14, G11)
G11 = NOR(G5, G9)
G12 = NOR(G1, G7)
G13 = NOR(G2, G12)
";

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub name: String,
    pub n_pis: usize,
    pub n_pos: usize,
    pub n_ffs: usize,
    pub n_gates: usize,
    pub seed: u64,
}

const COMB_KINDS: [GateKind; 7] = [
    GateKind::And,
    GateKind::Nand,
    GateKind::Or,
    GateKind::Nor,
    GateKind::Xor,
    GateKind::Xnor,
    GateKind::Not,
];

/// Generate a valid sequential circuit: every net driven, combinational
/// part acyclic, FF state feeding back into the logic.
pub fn generate(cfg: &GenConfig) -> Netlist {
    assert!(cfg.n_pis > 0 && cfg.n_pos > 0 && cfg.n_gates > 0);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut n = Netlist::new(cfg.name.clone());

    let mut pool = Vec::new();
    for i in 0..cfg.n_pis {
        let id = n.intern(&format!("pi{i}"));
        n.inputs.push(id);
        pool.push(id);
    }
    let mut ff_outs = Vec::new();
    for i in 0..cfg.n_ffs {
        let id = n.intern(&format!("ff{i}"));
        ff_outs.push(id);
        pool.push(id);
    }

    for i in 0..cfg.n_gates {
        let kind = COMB_KINDS[rng.gen_range(0..COMB_KINDS.len())];
        let arity = match kind {
            GateKind::Not => 1,
            // a sprinkling of 3-input gates for fan-in variety
            _ => {
                if rng.gen_ratio(1, 6) {
                    3
                } else {
                    2
                }
            }
        };
        let mut inputs = Vec::with_capacity(arity);
        for _ in 0..arity {
            // Early gates draw from PIs/FFs, later ones bias toward recent
            // nets so depth builds up.
            let lo = if pool.len() > 8 && rng.gen_ratio(2, 3) {
                pool.len() / 2
            } else {
                0
            };
            inputs.push(pool[rng.gen_range(lo..pool.len())]);
        }
        let out = n.intern(&format!("g{i}"));
        n.gates.push(Gate { output: out, kind, inputs });
        pool.push(out);
    }

    // FF data: prefer gate outputs so state depends on logic (and thereby
    // on other FFs), which keeps the FF adjacency graph connected-ish.
    let gate_base = cfg.n_pis + cfg.n_ffs;
    for (i, &out) in ff_outs.iter().enumerate() {
        let data = if pool.len() > gate_base {
            pool[rng.gen_range(gate_base..pool.len())]
        } else {
            pool[rng.gen_range(0..pool.len())]
        };
        let _ = i;
        n.flipflops.push(FlipFlop { output: out, data });
    }

    // POs: draw from unused nets first so little logic is dead.
    let sinks = n.sinks();
    let mut unused: Vec<_> = n
        .gates
        .iter()
        .map(|g| g.output)
        .filter(|id| sinks[id.idx()].is_empty())
        .collect();
    let mut chosen = Vec::new();
    while chosen.len() < cfg.n_pos {
        let id = if !unused.is_empty() {
            unused.remove(rng.gen_range(0..unused.len()))
        } else {
            let cand = pool[rng.gen_range(gate_base.min(pool.len() - 1)..pool.len())];
            if chosen.contains(&cand) {
                continue;
            }
            cand
        };
        chosen.push(id);
    }
    n.outputs = chosen;

    n.validate(true).expect("generated circuit must be valid");
    n
}

/// The desk-scale experiment suite: s27 plus seven synthetic circuits of
/// increasing size (FF counts chosen so locked latch counts land in the
/// tens, like the smaller ISCAS'89/ITC'99 members).
pub fn small_suite() -> Vec<Netlist> {
    let mut suite = vec![crate::netlist::parse_bench(S27_BENCH).unwrap()];
    let sizes: [(usize, usize, usize, usize); 7] = [
        (4, 3, 10, 90),
        (5, 4, 12, 120),
        (3, 3, 14, 120),
        (6, 5, 18, 180),
        (4, 4, 22, 220),
        (8, 6, 28, 300),
        (6, 6, 36, 420),
    ];
    for (i, (pis, pos, ffs, gates)) in sizes.into_iter().enumerate() {
        suite.push(generate(&GenConfig {
            name: format!("gen{:02}", i + 1),
            n_pis: pis,
            n_pos: pos,
            n_ffs: ffs,
            n_gates: gates,
            seed: 0xB00 + i as u64,
        }));
    }
    suite
}

/// Small random combinational circuit (no FFs/latches) for equivalence
/// testing: `n_pis` inputs, every PO a function of the inputs.
pub fn random_combinational(n_pis: usize, n_gates: usize, n_pos: usize, seed: u64) -> Netlist {
    let mut n = generate(&GenConfig {
        name: format!("comb{seed}"),
        n_pis,
        n_pos,
        n_ffs: 0,
        n_gates,
        seed,
    });
    n.flipflops.clear();
    n.validate(true).unwrap();
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    #[test]
    fn s27_parses_with_expected_shape() {
        let n = parse_bench(S27_BENCH).unwrap();
        assert_eq!(n.name, "s27");
        assert_eq!(n.inputs.len(), 4);
        assert_eq!(n.outputs.len(), 1);
        assert_eq!(n.flipflops.len(), 3);
        assert_eq!(n.gates.len(), 10);
    }

    #[test]
    fn benchmark_ff_count_equals_dff_lines() {
        // Oracle: count DFF lines in the text independently of the parser.
        let suite = small_suite();
        for n in &suite {
            let text = crate::netlist::write_bench(n);
            let dff_lines = text.lines().filter(|l| l.contains("= DFF(")).count();
            assert_eq!(n.flipflops.len(), dff_lines, "{}", n.name);
        }
        let s298_scale = &suite[3]; // gen03: the 14-FF circuit
        assert_eq!(s298_scale.flipflops.len(), 14);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig {
            name: "t".into(),
            n_pis: 4,
            n_pos: 3,
            n_ffs: 6,
            n_gates: 40,
            seed: 7,
        };
        assert_eq!(generate(&cfg), generate(&cfg));
    }
}
