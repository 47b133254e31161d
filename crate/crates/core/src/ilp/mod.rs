//! 0-1 ILP over latch types and colors.
//!
//! Per latch i there are four binaries: T_P(i), T_S(i), T_DD(i) and a color
//! C(i). The objective maximizes the classifier-probability mass of the
//! chosen types; the constraints admit exactly the assignments consistent
//! with an alternating primary/secondary structure threaded through delay
//! decoys:
//!
//! - F0: T_P + T_S + T_DD = 1, F1: C >= T_P, F2: C <= 1 - T_S
//! - per edge i->j: C0: T_P(i) + T_P(j) <= 1, C1: T_S(i) + T_S(j) <= 1,
//!   C2: |C(j) - C(i)| <= 1 - T_DD(j),
//!   C3: 1 - (1 - T_DD(i)) - T_DD(j) <= C(i) + C(j) <= 1 + (1 - T_DD(i)) + T_DD(j)
//! - boundary: a PO-adjacent latch has T_P = 0 and C = 0; a latch adjacent
//!   to both a PI and a PO is a delay decoy. FFs fold into the PI/PO sets.

mod solve;

pub use solve::{solve_topk, solve_topk_nogood};

use crate::netlist::LatchType;
use crate::seqgraph::{NodeKind, SequentialGraph};

/// Latch types expressible in the ILP (logic decoys are gone by phase 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IlpType {
    Primary,
    Secondary,
    DelayDecoy,
}

impl IlpType {
    pub const ALL: [IlpType; 3] = [IlpType::Primary, IlpType::Secondary, IlpType::DelayDecoy];

    pub fn to_latch_type(self) -> LatchType {
        match self {
            IlpType::Primary => LatchType::Primary,
            IlpType::Secondary => LatchType::Secondary,
            IlpType::DelayDecoy => LatchType::DelayDecoy,
        }
    }

    pub fn from_latch_type(ty: LatchType) -> Option<IlpType> {
        Some(match ty {
            LatchType::Primary => IlpType::Primary,
            LatchType::Secondary => IlpType::Secondary,
            LatchType::DelayDecoy => IlpType::DelayDecoy,
            LatchType::LogicDecoy => return None,
        })
    }

    pub fn index(self) -> usize {
        match self {
            IlpType::Primary => 0,
            IlpType::Secondary => 1,
            IlpType::DelayDecoy => 2,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            IlpType::Primary => "PRIMARY",
            IlpType::Secondary => "SECONDARY",
            IlpType::DelayDecoy => "DELAY_DECOY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

/// Variable index: latch i owns 4i..4i+3 = (T_P, T_S, T_DD, C).
pub fn var_tp(i: usize) -> usize {
    4 * i
}
pub fn var_ts(i: usize) -> usize {
    4 * i + 1
}
pub fn var_tdd(i: usize) -> usize {
    4 * i + 2
}
pub fn var_c(i: usize) -> usize {
    4 * i + 3
}

/// Sum(coef * var) cmp rhs.
#[derive(Debug, Clone)]
pub struct LinConstraint {
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
    pub tag: String,
}

impl LinConstraint {
    pub fn satisfied(&self, values: &[u8]) -> bool {
        let lhs: f64 = self
            .terms
            .iter()
            .map(|&(v, c)| c * values[v] as f64)
            .sum();
        match self.cmp {
            Cmp::Le => lhs <= self.rhs,
            Cmp::Eq => lhs == self.rhs,
            Cmp::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IlpModel {
    pub n: usize,
    /// Objective coefficients [Pr_P, Pr_S, Pr_DD] per latch.
    pub coef: Vec<[f64; 3]>,
    /// Deduplicated latch-to-latch edges (self-loops allowed).
    pub edges: Vec<(usize, usize)>,
    pub po_adjacent: Vec<bool>,
    pub pi_adjacent: Vec<bool>,
    pub constraints: Vec<LinConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpAssignment {
    pub types: Vec<IlpType>,
    pub colors: Vec<bool>,
}

impl IlpAssignment {
    /// Variable vector in model order, for the generic checker.
    pub fn to_values(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(4 * self.types.len());
        for (i, &t) in self.types.iter().enumerate() {
            v.push((t == IlpType::Primary) as u8);
            v.push((t == IlpType::Secondary) as u8);
            v.push((t == IlpType::DelayDecoy) as u8);
            v.push(self.colors[i] as u8);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub assignment: IlpAssignment,
    pub objective: f64,
}

/// Ordered pool of the k best feasible assignments, distinct in type
/// variables, objective non-increasing, ties broken by lexicographic latch
/// order (P < S < DD).
#[derive(Debug, Clone)]
pub struct SolutionPool {
    pub entries: Vec<PoolEntry>,
    pub requested: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum IlpError {
    #[error("probability vector covers {got} latches, graph has {want}")]
    ProbsMismatch { got: usize, want: usize },
    #[error("non-finite objective coefficient at latch {0}")]
    BadCoefficient(usize),
}

/// Assemble the model from a phase-2 sequential graph and per-latch type
/// probabilities (already duplicated for a 2-level classifier).
pub fn build_model(graph: &SequentialGraph, probs: &[[f64; 3]]) -> Result<IlpModel, IlpError> {
    let n = graph.latch_nodes.len();
    if probs.len() != n {
        return Err(IlpError::ProbsMismatch {
            got: probs.len(),
            want: n,
        });
    }
    for (i, p) in probs.iter().enumerate() {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(IlpError::BadCoefficient(i));
        }
    }

    // FF-adjacency folds into the PI/PO sets.
    let mut po_adjacent = vec![false; n];
    let mut pi_adjacent = vec![false; n];
    let mut edges = Vec::new();
    for &(u, v) in &graph.edges {
        let ku = graph.nodes[u].kind;
        let kv = graph.nodes[v].kind;
        match (ku, kv) {
            (NodeKind::Latch, NodeKind::Latch) => {
                edges.push((
                    graph.nodes[u].latch_id as usize,
                    graph.nodes[v].latch_id as usize,
                ));
            }
            (NodeKind::Latch, NodeKind::Po) | (NodeKind::Latch, NodeKind::Ff) => {
                po_adjacent[graph.nodes[u].latch_id as usize] = true;
            }
            (NodeKind::Pi, NodeKind::Latch) | (NodeKind::Ff, NodeKind::Latch) => {
                pi_adjacent[graph.nodes[v].latch_id as usize] = true;
            }
            _ => {}
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let mut cons = Vec::new();
    for i in 0..n {
        cons.push(LinConstraint {
            terms: vec![(var_tp(i), 1.0), (var_ts(i), 1.0), (var_tdd(i), 1.0)],
            cmp: Cmp::Eq,
            rhs: 1.0,
            tag: format!("F0({i})"),
        });
        cons.push(LinConstraint {
            terms: vec![(var_tp(i), 1.0), (var_c(i), -1.0)],
            cmp: Cmp::Le,
            rhs: 0.0,
            tag: format!("F1({i})"),
        });
        cons.push(LinConstraint {
            terms: vec![(var_c(i), 1.0), (var_ts(i), 1.0)],
            cmp: Cmp::Le,
            rhs: 1.0,
            tag: format!("F2({i})"),
        });
    }
    for &(i, j) in &edges {
        cons.push(LinConstraint {
            terms: vec![(var_tp(i), 1.0), (var_tp(j), 1.0)],
            cmp: Cmp::Le,
            rhs: 1.0,
            tag: format!("C0({i},{j})"),
        });
        cons.push(LinConstraint {
            terms: vec![(var_ts(i), 1.0), (var_ts(j), 1.0)],
            cmp: Cmp::Le,
            rhs: 1.0,
            tag: format!("C1({i},{j})"),
        });
        // C2: |C(j) - C(i)| <= 1 - T_DD(j)
        cons.push(LinConstraint {
            terms: vec![(var_c(j), 1.0), (var_c(i), -1.0), (var_tdd(j), 1.0)],
            cmp: Cmp::Le,
            rhs: 1.0,
            tag: format!("C2a({i},{j})"),
        });
        cons.push(LinConstraint {
            terms: vec![(var_c(i), 1.0), (var_c(j), -1.0), (var_tdd(j), 1.0)],
            cmp: Cmp::Le,
            rhs: 1.0,
            tag: format!("C2b({i},{j})"),
        });
        // C3 lower: T_DD(i) - T_DD(j) - C(i) - C(j) <= 0
        cons.push(LinConstraint {
            terms: vec![
                (var_tdd(i), 1.0),
                (var_tdd(j), -1.0),
                (var_c(i), -1.0),
                (var_c(j), -1.0),
            ],
            cmp: Cmp::Le,
            rhs: 0.0,
            tag: format!("C3a({i},{j})"),
        });
        // C3 upper: C(i) + C(j) + T_DD(i) - T_DD(j) <= 2
        cons.push(LinConstraint {
            terms: vec![
                (var_c(i), 1.0),
                (var_c(j), 1.0),
                (var_tdd(i), 1.0),
                (var_tdd(j), -1.0),
            ],
            cmp: Cmp::Le,
            rhs: 2.0,
            tag: format!("C3b({i},{j})"),
        });
    }
    for i in 0..n {
        if po_adjacent[i] {
            cons.push(LinConstraint {
                terms: vec![(var_tp(i), 1.0)],
                cmp: Cmp::Eq,
                rhs: 0.0,
                tag: format!("B0({i})"),
            });
            cons.push(LinConstraint {
                terms: vec![(var_c(i), 1.0)],
                cmp: Cmp::Eq,
                rhs: 0.0,
                tag: format!("B1({i})"),
            });
        }
        if po_adjacent[i] && pi_adjacent[i] {
            cons.push(LinConstraint {
                terms: vec![(var_tdd(i), 1.0)],
                cmp: Cmp::Eq,
                rhs: 1.0,
                tag: format!("B2({i})"),
            });
        }
    }

    Ok(IlpModel {
        n,
        coef: probs.to_vec(),
        edges,
        po_adjacent,
        pi_adjacent,
        constraints: cons,
    })
}

/// Objective of a type assignment, accumulated in latch-id order (the
/// canonical accumulation used everywhere so float comparisons are exact).
pub fn objective_of(model: &IlpModel, types: &[IlpType]) -> f64 {
    let mut acc = 0.0;
    for (i, &t) in types.iter().enumerate() {
        acc += model.coef[i][t.index()];
    }
    acc
}

/// Evaluate every linear constraint exactly; returns violated tags.
pub fn check_feasible(model: &IlpModel, assignment: &IlpAssignment) -> (bool, Vec<String>) {
    assert_eq!(assignment.types.len(), model.n);
    assert_eq!(assignment.colors.len(), model.n);
    let values = assignment.to_values();
    let violated: Vec<String> = model
        .constraints
        .iter()
        .filter(|c| !c.satisfied(&values))
        .map(|c| c.tag.clone())
        .collect();
    (violated.is_empty(), violated)
}

/// Derive a color vector for a fixed type assignment by constraint
/// propagation (P -> 1, S -> 0, PO-adjacent -> 0, C2 equalities across
/// delay decoys, C3 inequalities out of them); free components default to
/// color 0. Returns `None` when the types admit no consistent coloring.
pub fn colors_for_types(model: &IlpModel, types: &[IlpType]) -> Option<Vec<bool>> {
    assert_eq!(types.len(), model.n);
    // Parity union-find with a ground node fixed at color 0.
    let ground = model.n;
    let mut parent: Vec<usize> = (0..=model.n).collect();
    let mut parity = vec![false; model.n + 1];
    fn find(parent: &mut [usize], parity: &mut [bool], x: usize) -> (usize, bool) {
        let mut r = x;
        let mut p = false;
        while parent[r] != r {
            p ^= parity[r];
            r = parent[r];
        }
        // Path compression with parity update.
        let mut at = x;
        let mut pat = p;
        while parent[at] != at {
            let next = parent[at];
            let next_p = pat ^ parity[at];
            parent[at] = r;
            parity[at] = pat;
            at = next;
            pat = next_p;
        }
        (r, p)
    }
    let union = |parent: &mut Vec<usize>, parity: &mut Vec<bool>, a: usize, b: usize, rel: bool| -> bool {
        let (ra, pa) = find(parent, parity, a);
        let (rb, pb) = find(parent, parity, b);
        if ra == rb {
            return pa ^ pb == rel;
        }
        parent[rb] = ra;
        parity[rb] = pa ^ pb ^ rel;
        true
    };

    for (i, &t) in types.iter().enumerate() {
        match t {
            IlpType::Primary => {
                if !union(&mut parent, &mut parity, i, ground, true) {
                    return None;
                }
            }
            IlpType::Secondary => {
                if !union(&mut parent, &mut parity, i, ground, false) {
                    return None;
                }
            }
            IlpType::DelayDecoy => {}
        }
        if model.po_adjacent[i] && !union(&mut parent, &mut parity, i, ground, false) {
            return None;
        }
    }
    for &(i, j) in &model.edges {
        if types[j] == IlpType::DelayDecoy {
            // C2: C(i) = C(j)
            if !union(&mut parent, &mut parity, i, j, false) {
                return None;
            }
        }
        if types[i] == IlpType::DelayDecoy && types[j] != IlpType::DelayDecoy {
            // C3: C(i) != C(j)
            if !union(&mut parent, &mut parity, i, j, true) {
                return None;
            }
        }
    }
    let (groot, gpar) = find(&mut parent, &mut parity, ground);
    let colors = (0..model.n)
        .map(|i| {
            let (r, p) = find(&mut parent, &mut parity, i);
            if r == groot {
                p ^ gpar
            } else {
                p
            }
        })
        .collect();
    Some(colors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgraph::{SeqNode, SequentialGraph};

    pub fn latch_graph(n: usize, edges: &[(usize, usize)]) -> SequentialGraph {
        let nodes = (0..n)
            .map(|i| SeqNode {
                kind: NodeKind::Latch,
                name: format!("l{i}"),
                latch_id: i as u32,
            })
            .collect();
        SequentialGraph::new(nodes, edges.to_vec())
    }

    pub fn uniform_probs(n: usize) -> Vec<[f64; 3]> {
        vec![[1.0 / 3.0; 3]; n]
    }

    #[test]
    fn empty_model_is_trivially_feasible() {
        let g = latch_graph(0, &[]);
        let m = build_model(&g, &[]).unwrap();
        let a = IlpAssignment {
            types: vec![],
            colors: vec![],
        };
        assert!(check_feasible(&m, &a).0);
    }

    #[test]
    fn decoy_chain_forces_colors() {
        // P -> DD -> DD -> S: feasible, colors 1,1,1,0.
        let g = latch_graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let m = build_model(&g, &uniform_probs(4)).unwrap();
        let types = vec![
            IlpType::Primary,
            IlpType::DelayDecoy,
            IlpType::DelayDecoy,
            IlpType::Secondary,
        ];
        let colors = colors_for_types(&m, &types).unwrap();
        assert_eq!(colors, vec![true, true, true, false]);
        let (ok, viol) = check_feasible(
            &m,
            &IlpAssignment {
                types,
                colors,
            },
        );
        assert!(ok, "violations: {viol:?}");
    }

    #[test]
    fn adjacent_primaries_are_infeasible() {
        let g = latch_graph(2, &[(0, 1)]);
        let m = build_model(&g, &uniform_probs(2)).unwrap();
        let types = vec![IlpType::Primary, IlpType::Primary];
        let colors = vec![true, true];
        let (ok, viol) = check_feasible(&m, &IlpAssignment { types, colors });
        assert!(!ok);
        assert!(viol.iter().any(|t| t.starts_with("C0")));
    }

    #[test]
    fn all_dd_feasible_with_constant_component_colors() {
        // Two components; colors constant per component via C2.
        let g = latch_graph(5, &[(0, 1), (1, 2), (3, 4)]);
        let m = build_model(&g, &uniform_probs(5)).unwrap();
        let types = vec![IlpType::DelayDecoy; 5];
        for c0 in [false, true] {
            for c1 in [false, true] {
                let colors = vec![c0, c0, c0, c1, c1];
                let (ok, viol) = check_feasible(
                    &m,
                    &IlpAssignment {
                        types: types.clone(),
                        colors,
                    },
                );
                assert!(ok, "violations: {viol:?}");
            }
        }
        // Mixed colors inside a component violate C2.
        let (ok, viol) = check_feasible(
            &m,
            &IlpAssignment {
                types,
                colors: vec![true, false, false, false, false],
            },
        );
        assert!(!ok);
        assert!(viol.iter().any(|t| t.starts_with("C2")));
    }

    #[test]
    fn c3_linear_form_matches_conditional_truth_table() {
        // The two-sided linear encoding of C3 must agree with
        // "if T_DD(i) = 1 and latch j is P/S then C(i) != C(j)"
        // over all 16 relevant binary cases.
        for tdd_i in [0u8, 1] {
            for tdd_j in [0u8, 1] {
                for ci in [0u8, 1] {
                    for cj in [0u8, 1] {
                        let logical = if tdd_i == 1 && tdd_j == 0 {
                            ci != cj
                        } else {
                            true
                        };
                        let lower = tdd_i as f64 - tdd_j as f64 - ci as f64 - cj as f64 <= 0.0;
                        let upper =
                            ci as f64 + cj as f64 + tdd_i as f64 - tdd_j as f64 <= 2.0;
                        assert_eq!(
                            lower && upper,
                            logical,
                            "tdd_i={tdd_i} tdd_j={tdd_j} ci={ci} cj={cj}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn po_adjacent_rules() {
        // Latch 0 drives latch 1 which drives a PO.
        let mut nodes = vec![
            SeqNode {
                kind: NodeKind::Latch,
                name: "l0".into(),
                latch_id: 0,
            },
            SeqNode {
                kind: NodeKind::Latch,
                name: "l1".into(),
                latch_id: 1,
            },
            SeqNode {
                kind: NodeKind::Po,
                name: "z".into(),
                latch_id: 0,
            },
        ];
        nodes[2].latch_id = 0;
        let g = SequentialGraph::new(nodes, vec![(0, 1), (1, 2)]);
        let m = build_model(&g, &uniform_probs(2)).unwrap();
        assert!(!m.po_adjacent[0]);
        assert!(m.po_adjacent[1]);
        // P at the PO-adjacent latch violates B0.
        let (ok, viol) = check_feasible(
            &m,
            &IlpAssignment {
                types: vec![IlpType::Primary, IlpType::Primary],
                colors: vec![true, true],
            },
        );
        assert!(!ok);
        assert!(viol.iter().any(|t| t.starts_with("B0(1)")));
        // P -> S with color 1, 0 is fine.
        let a = IlpAssignment {
            types: vec![IlpType::Primary, IlpType::Secondary],
            colors: vec![true, false],
        };
        let (ok, viol) = check_feasible(&m, &a);
        assert!(ok, "violations: {viol:?}");
    }
}
