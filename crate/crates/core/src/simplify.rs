//! Phase-1 post-processing: remove predicted logic decoys, tie their
//! outputs to constant 0, propagate constants to fixpoint, and drop dead
//! gates. This reverses the false paths introduced by decoy MUX/OR/XOR
//! companions (MUX with a 0 select collapses onto its near-end input).
//!
//! Deliberately minimal: locking only introduces 0/1 constants through
//! decoy outputs, so the rule set below is sufficient. Latches and FFs are
//! never deleted even when their data input becomes constant.

use crate::netlist::{Gate, GateKind, Netlist, NetId};
use crate::seqgraph::{self, FeatureVector, SequentialGraph};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error)]
pub enum SimplifyError {
    #[error("latch id {0} does not exist")]
    NoSuchLatch(u32),
}

/// Delete the listed latches and re-drive each of their output nets with a
/// constant 0. Mispredicted ids are removed all the same; the scoring in
/// evaluation accounts for the damage.
pub fn remove_logic_decoys(
    netlist: &Netlist,
    predicted_ld: &BTreeSet<u32>,
) -> Result<Netlist, SimplifyError> {
    for &id in predicted_ld {
        if id as usize >= netlist.latches.len() {
            return Err(SimplifyError::NoSuchLatch(id));
        }
    }
    let mut out = netlist.clone();
    let mut kept = Vec::new();
    for (li, l) in out.latches.clone().into_iter().enumerate() {
        if predicted_ld.contains(&(li as u32)) {
            out.gates.push(Gate {
                output: l.output,
                kind: GateKind::Const0,
                inputs: vec![],
            });
        } else {
            kept.push(l);
        }
    }
    out.latches = kept;
    Ok(out)
}

/// One gate rewrite under known constant inputs.
/// Returns `None` to keep the gate unchanged.
fn rewrite_gate(gate: &Gate, consts: &[Option<bool>]) -> Option<Gate> {
    use GateKind::*;
    let cv = |id: NetId| consts[id.idx()];
    let any_const = gate.inputs.iter().any(|&i| cv(i).is_some());
    if !any_const {
        return None;
    }
    let make = |kind: GateKind, inputs: Vec<NetId>| Gate {
        output: gate.output,
        kind,
        inputs,
    };
    let constant = |v: bool| {
        Some(make(if v { Const1 } else { Const0 }, vec![]))
    };
    match gate.kind {
        And | Nand | Or | Nor => {
            // A `kill` input forces the output; neutral inputs drop out.
            let (kill, out_on_kill) = match gate.kind {
                And => (false, false),
                Nand => (false, true),
                Or => (true, true),
                Nor => (true, false),
                _ => unreachable!(),
            };
            if gate.inputs.iter().any(|&i| cv(i) == Some(kill)) {
                return constant(out_on_kill);
            }
            let rest: Vec<NetId> = gate
                .inputs
                .iter()
                .copied()
                .filter(|&i| cv(i).is_none())
                .collect();
            let inverted = matches!(gate.kind, Nand | Nor);
            match rest.len() {
                0 => constant(!out_on_kill),
                1 => Some(make(if inverted { Not } else { Buf }, rest)),
                _ => Some(make(gate.kind, rest)),
            }
        }
        Xor | Xnor => {
            let mut parity = matches!(gate.kind, Xnor);
            let mut rest = Vec::new();
            for &i in &gate.inputs {
                match cv(i) {
                    Some(v) => parity ^= v,
                    None => rest.push(i),
                }
            }
            match rest.len() {
                0 => constant(parity),
                1 => Some(make(if parity { Not } else { Buf }, rest)),
                _ => Some(make(if parity { Xnor } else { Xor }, rest)),
            }
        }
        Not => cv(gate.inputs[0]).and_then(|v| constant(!v)),
        Buf => cv(gate.inputs[0]).and_then(constant),
        Mux => match cv(gate.inputs[0]) {
            Some(false) => Some(make(Buf, vec![gate.inputs[1]])),
            Some(true) => Some(make(Buf, vec![gate.inputs[2]])),
            None => None,
        },
        Const0 | Const1 => None,
    }
}

/// Propagate constants to fixpoint and drop dead gates. Sequential elements
/// survive even with constant data inputs. Gate count never increases.
pub fn propagate_constants(netlist: &Netlist) -> Netlist {
    let mut out = netlist.clone();
    loop {
        let mut changed = false;

        // Known constant nets: driven by CONST gates.
        let mut consts: Vec<Option<bool>> = vec![None; out.n_nets()];
        for g in &out.gates {
            match g.kind {
                GateKind::Const0 => consts[g.output.idx()] = Some(false),
                GateKind::Const1 => consts[g.output.idx()] = Some(true),
                _ => {}
            }
        }

        for gi in 0..out.gates.len() {
            if let Some(new_gate) = rewrite_gate(&out.gates[gi], &consts) {
                if new_gate.kind != out.gates[gi].kind || new_gate.inputs != out.gates[gi].inputs {
                    if let GateKind::Const0 | GateKind::Const1 = new_gate.kind {
                        consts[new_gate.output.idx()] =
                            Some(new_gate.kind == GateKind::Const1);
                    }
                    out.gates[gi] = new_gate;
                    changed = true;
                }
            }
        }

        // Dead-gate elimination: outputs that feed nothing.
        let sinks = out.sinks();
        let dead: Vec<usize> = (0..out.gates.len())
            .filter(|&gi| {
                let o = out.gates[gi].output;
                sinks[o.idx()].is_empty()
            })
            .collect();
        if !dead.is_empty() {
            let deadset: BTreeSet<usize> = dead.into_iter().collect();
            out.gates = out
                .gates
                .iter()
                .enumerate()
                .filter(|(gi, _)| !deadset.contains(gi))
                .map(|(_, g)| g.clone())
                .collect();
            changed = true;
        }

        if !changed {
            break;
        }
    }
    out.compact_nets();
    out
}

/// Remove predicted decoys, propagate, and re-extract graph + features for
/// the phase-2 classifier.
pub fn simplify_for_phase2(
    netlist: &Netlist,
    predicted_ld: &BTreeSet<u32>,
) -> Result<(Netlist, SequentialGraph, Vec<FeatureVector>), SimplifyError> {
    let removed = remove_logic_decoys(netlist, predicted_ld)?;
    let simplified = propagate_constants(&removed);
    let graph = seqgraph::extract_graph(&simplified);
    let features = seqgraph::featurize_with_graph(&simplified, &graph);
    Ok((simplified, graph, features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{simulate, KeyAssignment};
    use crate::netlist::parse_bench;

    #[test]
    fn and_with_zero_collapses() {
        let n = parse_bench("INPUT(a)\nOUTPUT(z)\nc = CONST0()\nz = AND(a, c)").unwrap();
        let s = propagate_constants(&n);
        // z becomes CONST0; the old const feeding it goes dead.
        assert_eq!(s.gates.len(), 1);
        assert_eq!(s.gates[0].kind, GateKind::Const0);
        assert_eq!(s.net_name(s.gates[0].output), "z");
    }

    #[test]
    fn mux_with_zero_select_reconnects_near_end() {
        let text = "\
INPUT(a)
INPUT(b)
OUTPUT(z)
sel = CONST0()
m = MUX(sel, a, b)
z = BUF(m)
";
        let n = parse_bench(text).unwrap();
        let s = propagate_constants(&n);
        // m = BUF(a): the b edge is gone.
        let m = s.gates.iter().find(|g| s.net_name(g.output) == "m").unwrap();
        assert_eq!(m.kind, GateKind::Buf);
        assert_eq!(s.net_name(m.inputs[0]), "a");
    }

    #[test]
    fn empty_prediction_set_is_identity() {
        let n = parse_bench(crate::gen::S27_BENCH).unwrap();
        let (s, _, feats) = simplify_for_phase2(&n, &BTreeSet::new()).unwrap();
        assert_eq!(s, n);
        assert_eq!(feats.len(), 0);
    }

    #[test]
    fn removing_all_latches_leaves_boundary_graph() {
        let text = "\
INPUT(a)
OUTPUT(z)
l0 = LATCH(a, K0)
l1 = LATCH(l0, K1)
z = OR(a, l1)
";
        let n = parse_bench(text).unwrap();
        let all: BTreeSet<u32> = [0, 1].into_iter().collect();
        let (s, g, feats) = simplify_for_phase2(&n, &all).unwrap();
        assert!(s.latches.is_empty());
        assert!(feats.is_empty());
        assert!(g
            .nodes
            .iter()
            .all(|node| matches!(node.kind, seqgraph::NodeKind::Pi | seqgraph::NodeKind::Po)));
    }

    #[test]
    fn unknown_latch_id_is_error() {
        let n = parse_bench(crate::gen::S27_BENCH).unwrap();
        let bad: BTreeSet<u32> = [3].into_iter().collect();
        assert!(matches!(
            remove_logic_decoys(&n, &bad),
            Err(SimplifyError::NoSuchLatch(3))
        ));
    }

    #[test]
    fn idempotent_on_random_circuits() {
        for seed in 0..20 {
            let mut n = crate::gen::random_combinational(4, 25, 3, seed);
            // Tie one random gate output to 0 by swapping its driver.
            let gi = (seed as usize * 7) % n.gates.len();
            n.gates[gi] = Gate {
                output: n.gates[gi].output,
                kind: GateKind::Const0,
                inputs: vec![],
            };
            let once = propagate_constants(&n);
            let twice = propagate_constants(&once);
            assert_eq!(once, twice, "seed {seed}");
            assert!(once.gates.len() <= n.gates.len(), "monotone shrinkage");
        }
    }

    #[test]
    fn tied_circuit_equivalence_exhaustive() {
        // Semantic preservation: tie a net to 0 and simplify; the result
        // must agree with the tied original on all 16 input patterns.
        let empty = KeyAssignment { types: vec![] };
        for seed in 100..120 {
            let mut n = crate::gen::random_combinational(4, 30, 3, seed);
            let gi = (seed as usize * 13) % n.gates.len();
            n.gates[gi] = Gate {
                output: n.gates[gi].output,
                kind: GateKind::Const0,
                inputs: vec![],
            };
            let s = propagate_constants(&n);
            for pattern in crate::eval::sim::exhaustive_inputs(4) {
                let inputs = vec![pattern];
                let a = simulate(&n, &empty, &inputs);
                let b = simulate(&s, &empty, &inputs);
                assert_eq!(a.trace, b.trace, "seed {seed}");
            }
        }
    }
}
