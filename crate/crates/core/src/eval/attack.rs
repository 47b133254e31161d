//! The two-phase attack end to end, plus the ablation baselines used to
//! quantify its parts: an unconstrained closest-key search in place of the
//! ILP, and a single-phase variant driven by one 4-class classifier.

use super::{key_accuracy, functional_corruptibility, FcConfig, KeyAssignment};
use crate::ilp::{self, IlpType, SolutionPool};
use crate::ml::{Mlp, RandomForest};
use crate::netlist::{GroundTruth, LatchType, Netlist};
use crate::seqgraph;
use crate::simplify;
use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error(transparent)]
    Ml(#[from] crate::ml::MlError),
    #[error(transparent)]
    Simplify(#[from] crate::simplify::SimplifyError),
    #[error(transparent)]
    Ilp(#[from] crate::ilp::IlpError),
    #[error(transparent)]
    Eval(#[from] super::EvalError),
}

/// Phase-2 classifier depth: 2-level (P/S vs DD) or 3-level (P, S, DD).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierLevel {
    Two,
    Three,
}

/// Everything the attack produced on one locked circuit.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub phase1_accuracy: f64,
    pub predicted_ld: BTreeSet<u32>,
    /// Original latch id of each phase-2 (simplified) latch.
    pub slots: Vec<u32>,
    /// Phase-2 objective coefficients per simplified latch.
    pub coefs: Vec<[f64; 3]>,
    pub pool: SolutionPool,
    /// Merged candidate keys, pool order.
    pub keys: Vec<KeyAssignment>,
    pub t1_accuracy: f64,
    pub best_accuracy: f64,
    pub best_key: KeyAssignment,
    /// Ground truth stays feasible in the ILP built on the truth-simplified
    /// graph; the encoding's regression gate.
    pub ground_truth_feasible: bool,
    pub fc_best: Option<f64>,
    pub seconds_phase1: f64,
    pub seconds_simplify: f64,
    pub seconds_ilp: f64,
}

/// Merge phase-1 logic-decoy predictions with one pool entry into a total
/// key over the locked netlist's latches.
pub fn merge_key(
    n_latches: usize,
    predicted_ld: &BTreeSet<u32>,
    slots: &[u32],
    types: &[IlpType],
) -> KeyAssignment {
    let mut out = vec![LatchType::LogicDecoy; n_latches];
    debug_assert_eq!(slots.len(), types.len());
    for (&slot, &ty) in slots.iter().zip(types) {
        out[slot as usize] = ty.to_latch_type();
    }
    for &ld in predicted_ld {
        out[ld as usize] = LatchType::LogicDecoy;
    }
    KeyAssignment { types: out }
}

/// Probabilities for the ILP objective from the phase-2 model output:
/// a 2-level model's P/S probability is duplicated onto both coefficients.
pub fn ilp_coefficients(level: ClassifierLevel, probs: &[f64]) -> [f64; 3] {
    match level {
        ClassifierLevel::Two => [probs[0], probs[0], probs[1]],
        ClassifierLevel::Three => [probs[0], probs[1], probs[2]],
    }
}

/// Ground-truth types projected onto a simplified netlist's latches.
pub fn truth_types_for_slots(gt: &GroundTruth, slots: &[u32]) -> Vec<Option<IlpType>> {
    slots
        .iter()
        .map(|&s| gt.get(s).and_then(IlpType::from_latch_type))
        .collect()
}

/// Check that the ground truth is feasible for the model built on the
/// ground-truth-simplified graph.
pub fn ground_truth_is_feasible(locked: &Netlist, gt: &GroundTruth) -> Result<bool, AttackError> {
    let true_ld: BTreeSet<u32> = gt
        .types
        .iter()
        .filter(|(_, &t)| t == LatchType::LogicDecoy)
        .map(|(&id, _)| id)
        .collect();
    let (simp, graph, _) = simplify::simplify_for_phase2(locked, &true_ld)?;
    let slots: Vec<u32> = simp.latches.iter().map(|l| l.key_index).collect();
    let model = ilp::build_model(&graph, &vec![[1.0 / 3.0; 3]; slots.len()])?;
    let types: Vec<IlpType> = truth_types_for_slots(gt, &slots)
        .into_iter()
        .map(|t| t.expect("truth-simplified latches are never logic decoys"))
        .collect();
    let Some(colors) = ilp::colors_for_types(&model, &types) else {
        return Ok(false);
    };
    let (ok, _) = ilp::check_feasible(&model, &ilp::IlpAssignment { types, colors });
    Ok(ok)
}

/// Run the two-phase attack with trained models; ground truth is used only
/// for scoring (the attack itself is oracle-less).
#[allow(clippy::too_many_arguments)]
pub fn run_attack(
    locked: &Netlist,
    gt: &GroundTruth,
    phase1: &RandomForest,
    phase2: &Mlp,
    level: ClassifierLevel,
    k: usize,
    original: Option<&Netlist>,
    fc: &FcConfig,
) -> Result<AttackOutcome, AttackError> {
    let t0 = Instant::now();
    let feats = seqgraph::featurize(locked);
    let mut predicted_ld = BTreeSet::new();
    for (li, f) in feats.iter().enumerate() {
        let p = phase1.predict_proba(&f.to_array())?;
        if p[1] > p[0] {
            predicted_ld.insert(li as u32);
        }
    }
    let phase1_accuracy = if feats.is_empty() {
        1.0
    } else {
        feats
            .iter()
            .enumerate()
            .filter(|(li, _)| {
                let truth_ld = gt.get(*li as u32) == Some(LatchType::LogicDecoy);
                truth_ld == predicted_ld.contains(&(*li as u32))
            })
            .count() as f64
            / feats.len() as f64
    };
    let seconds_phase1 = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (simp, graph, feats2) = simplify::simplify_for_phase2(locked, &predicted_ld)?;
    let slots: Vec<u32> = simp.latches.iter().map(|l| l.key_index).collect();
    let seconds_simplify = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let mut coefs = Vec::with_capacity(slots.len());
    for f in &feats2 {
        let p = phase2.predict_proba(&f.to_array())?;
        coefs.push(ilp_coefficients(level, &p));
    }
    let model = ilp::build_model(&graph, &coefs)?;
    let pool = ilp::solve_topk(&model, k);
    let seconds_ilp = t2.elapsed().as_secs_f64();

    let keys: Vec<KeyAssignment> = pool
        .entries
        .iter()
        .map(|e| merge_key(locked.latches.len(), &predicted_ld, &slots, &e.assignment.types))
        .collect();
    let mut t1_accuracy = 0.0;
    let mut best_accuracy = 0.0;
    let mut best_key = KeyAssignment {
        types: vec![LatchType::LogicDecoy; locked.latches.len()],
    };
    for (i, key) in keys.iter().enumerate() {
        let acc = key_accuracy(key, gt)?;
        if i == 0 {
            t1_accuracy = acc;
        }
        if acc > best_accuracy {
            best_accuracy = acc;
            best_key = key.clone();
        }
    }

    let ground_truth_feasible = ground_truth_is_feasible(locked, gt)?;
    let fc_best = original.map(|orig| functional_corruptibility(locked, &best_key, orig, fc));

    Ok(AttackOutcome {
        phase1_accuracy,
        predicted_ld,
        slots,
        coefs,
        pool,
        keys,
        t1_accuracy,
        best_accuracy,
        best_key,
        ground_truth_feasible,
        fc_best,
        seconds_phase1,
        seconds_simplify,
        seconds_ilp,
    })
}

// ---------------------------------------------------------------------------
// Ablation 1: closest keys without structural constraints
// ---------------------------------------------------------------------------

struct HeapState {
    score: f64,
    ranks: Vec<u8>,
    last: usize,
}

impl PartialEq for HeapState {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score && self.ranks == other.ranks
    }
}
impl Eq for HeapState {}
impl PartialOrd for HeapState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapState {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on score; lexicographically smaller ranks first on ties.
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.ranks.cmp(&self.ranks))
    }
}

/// Enumerate the `k` type assignments with the highest sum of log
/// probabilities, ignoring every structural constraint (lazy heap k-best
/// over the per-latch product space). Returns type vectors in order.
pub fn closest_keys(coefs: &[[f64; 3]], k: usize) -> Vec<Vec<IlpType>> {
    let n = coefs.len();
    if k == 0 {
        return Vec::new();
    }
    // Per latch: type order sorted by descending log-probability.
    let log = |p: f64| {
        if p <= 0.0 {
            f64::NEG_INFINITY
        } else {
            p.ln()
        }
    };
    let mut options: Vec<[(f64, IlpType); 3]> = Vec::with_capacity(n);
    for c in coefs {
        let mut opts = [
            (log(c[0]), IlpType::Primary),
            (log(c[1]), IlpType::Secondary),
            (log(c[2]), IlpType::DelayDecoy),
        ];
        opts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        options.push(opts);
    }
    let score_of = |ranks: &[u8]| -> f64 {
        ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| options[i][r as usize].0)
            .sum()
    };
    let decode = |ranks: &[u8]| -> Vec<IlpType> {
        ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| options[i][r as usize].1)
            .collect()
    };

    let mut heap = BinaryHeap::new();
    let start = vec![0u8; n];
    heap.push(HeapState {
        score: score_of(&start),
        ranks: start,
        last: 0,
    });
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let Some(state) = heap.pop() else {
            break;
        };
        out.push(decode(&state.ranks));
        // Children: bump the rank at any position >= last.
        for p in state.last..n {
            if state.ranks[p] < 2 {
                let mut ranks = state.ranks.clone();
                ranks[p] += 1;
                heap.push(HeapState {
                    score: score_of(&ranks),
                    ranks,
                    last: p,
                });
            }
        }
        if n == 0 {
            break; // single empty assignment
        }
    }
    out
}

/// Best-of-pool accuracy of the unconstrained closest-key search against
/// the given per-latch truth (over the same latch domain as `coefs`).
pub fn ablation_closest_keys(coefs: &[[f64; 3]], truth: &[IlpType], k: usize) -> f64 {
    assert_eq!(coefs.len(), truth.len());
    if truth.is_empty() {
        return 1.0;
    }
    let pool = closest_keys(coefs, k);
    pool.iter()
        .map(|types| {
            types
                .iter()
                .zip(truth)
                .filter(|(a, b)| a == b)
                .count() as f64
                / truth.len() as f64
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Ablation 2: single-phase 4-class classifier + ILP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SinglePhaseOutcome {
    pub baseline_accuracy: f64,
    pub t1_accuracy: f64,
    pub best_accuracy: f64,
}

/// Single-phase variant: one 4-class model predicts everything; predicted
/// logic decoys are removed, and the ILP runs with the model's P/S/DD
/// probabilities as coefficients.
pub fn ablation_single_phase(
    locked: &Netlist,
    gt: &GroundTruth,
    baseline: &Mlp,
    k: usize,
) -> Result<SinglePhaseOutcome, AttackError> {
    let feats = seqgraph::featurize(locked);
    let mut predicted_ld = BTreeSet::new();
    let mut probs4: Vec<Vec<f64>> = Vec::with_capacity(feats.len());
    let mut baseline_hits = 0usize;
    for (li, f) in feats.iter().enumerate() {
        let p = baseline.predict_proba(&f.to_array())?;
        let arg = crate::ml::argmax(&p);
        let predicted = [
            LatchType::Primary,
            LatchType::Secondary,
            LatchType::DelayDecoy,
            LatchType::LogicDecoy,
        ][arg];
        if gt.get(li as u32) == Some(predicted) {
            baseline_hits += 1;
        }
        if arg == 3 {
            predicted_ld.insert(li as u32);
        }
        probs4.push(p);
    }
    let baseline_accuracy = if feats.is_empty() {
        1.0
    } else {
        baseline_hits as f64 / feats.len() as f64
    };

    let (simp, graph, _) = simplify::simplify_for_phase2(locked, &predicted_ld)?;
    let slots: Vec<u32> = simp.latches.iter().map(|l| l.key_index).collect();
    // Coefficients straight from the 4-class model's P/S/DD outputs.
    let coefs: Vec<[f64; 3]> = slots
        .iter()
        .map(|&s| {
            let p = &probs4[s as usize];
            [p[0], p[1], p[2]]
        })
        .collect();
    let model = ilp::build_model(&graph, &coefs)?;
    let pool = ilp::solve_topk(&model, k);

    let mut t1_accuracy = 0.0;
    let mut best_accuracy = 0.0f64;
    for (i, e) in pool.entries.iter().enumerate() {
        let key = merge_key(locked.latches.len(), &predicted_ld, &slots, &e.assignment.types);
        let acc = key_accuracy(&key, gt)?;
        if i == 0 {
            t1_accuracy = acc;
        }
        best_accuracy = best_accuracy.max(acc);
    }
    Ok(SinglePhaseOutcome {
        baseline_accuracy,
        t1_accuracy,
        best_accuracy,
    })
}

/// Serialize a merged solution pool: one line per solution — objective,
/// then a latch_id:TYPE:C triple for every key slot of the locked netlist
/// (phase-1 logic decoys carry C = 0). The evaluator consumes this format.
pub fn format_key_pool(
    pool: &SolutionPool,
    slots: &[u32],
    predicted_ld: &BTreeSet<u32>,
    n_latches: usize,
) -> String {
    let mut out = String::new();
    for e in &pool.entries {
        let mut by_slot: Vec<Option<(IlpType, bool)>> = vec![None; n_latches];
        for (i, &ty) in e.assignment.types.iter().enumerate() {
            by_slot[slots[i] as usize] = Some((ty, e.assignment.colors[i]));
        }
        let mut fields: Vec<String> = vec![format!("{:.6}", e.objective)];
        for (slot, entry) in by_slot.iter().enumerate() {
            let (token, color) = match entry {
                Some((ty, c)) => (ty.token(), *c as u8),
                None => {
                    debug_assert!(predicted_ld.contains(&(slot as u32)));
                    ("LOGIC_DECOY", 0)
                }
            };
            fields.push(format!("{slot}:{token}:{color}"));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}
