//! Attack scoring: key accuracy and functional corruptibility, plus the
//! end-to-end attack driver and ablation baselines.

pub mod attack;
pub mod sim;

pub use attack::{run_attack, AttackOutcome};
pub use sim::{random_inputs, simulate, SimResult, Simulator};

use crate::netlist::{GroundTruth, LatchType, Netlist};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// Candidate key: one latch type per latch id of the locked netlist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyAssignment {
    pub types: Vec<LatchType>,
}

impl KeyAssignment {
    pub fn from_ground_truth(gt: &GroundTruth) -> Self {
        KeyAssignment {
            types: gt.types.values().copied().collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("key covers {key} latches, ground truth covers {truth}")]
    DomainMismatch { key: usize, truth: usize },
}

/// Fraction of latches whose assigned type matches ground truth.
pub fn key_accuracy(key: &KeyAssignment, gt: &GroundTruth) -> Result<f64, EvalError> {
    if key.types.len() != gt.types.len() {
        return Err(EvalError::DomainMismatch {
            key: key.types.len(),
            truth: gt.types.len(),
        });
    }
    if key.types.is_empty() {
        return Ok(1.0);
    }
    let hits = key
        .types
        .iter()
        .enumerate()
        .filter(|(i, &t)| gt.get(*i as u32) == Some(t))
        .count();
    Ok(hits as f64 / key.types.len() as f64)
}

/// Functional-corruptibility protocol parameters.
#[derive(Debug, Clone, Copy)]
pub struct FcConfig {
    pub cycles: usize,
    pub runs: usize,
    pub seed: u64,
}

impl Default for FcConfig {
    fn default() -> Self {
        // Desk-scale default; configurable upward.
        FcConfig {
            cycles: 100,
            runs: 100,
            seed: 0,
        }
    }
}

/// Mean fraction of mismatching PO bits between the keyed locked circuit
/// and the original, over `runs` random input streams of `cycles` cycles.
/// A run that hits a non-settling phase counts as fully corrupted.
pub fn functional_corruptibility(
    locked: &Netlist,
    key: &KeyAssignment,
    original: &Netlist,
    cfg: &FcConfig,
) -> f64 {
    assert!(cfg.cycles >= 1 && cfg.runs >= 1);
    assert_eq!(locked.inputs.len(), original.inputs.len());
    assert_eq!(locked.outputs.len(), original.outputs.len());
    let empty_key = KeyAssignment { types: vec![] };
    let per_run: Vec<f64> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ (run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let inputs = sim::random_inputs(locked.inputs.len(), cfg.cycles, &mut rng);
            let got = sim::simulate(locked, key, &inputs);
            if got.non_settle_events > 0 {
                return 1.0;
            }
            let want = sim::simulate(original, &empty_key, &inputs);
            let total_bits = (cfg.cycles * original.outputs.len()) as f64;
            let bad: usize = got
                .trace
                .iter()
                .zip(&want.trace)
                .map(|(g, w)| g.iter().zip(w).filter(|(a, b)| a != b).count())
                .sum();
            bad as f64 / total_bits
        })
        .collect();
    per_run.iter().sum::<f64>() / cfg.runs as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_locked;

    #[test]
    fn key_accuracy_counts_matches() {
        let text = "\
INPUT(a)
OUTPUT(z)
l0 = LATCH(a, K0)
l1 = LATCH(l0, K1)
l2 = LATCH(l1, K2)
l3 = LATCH(l2, K3)
z = BUF(l3)
";
        let sidecar = "0\tPRIMARY\n1\tSECONDARY\n2\tPRIMARY\n3\tSECONDARY\n";
        let (_, gt) = parse_locked(text, sidecar).unwrap();
        let exact = KeyAssignment::from_ground_truth(&gt);
        assert_eq!(key_accuracy(&exact, &gt).unwrap(), 1.0);
        let mut one_off = exact.clone();
        one_off.types[2] = LatchType::DelayDecoy;
        assert_eq!(key_accuracy(&one_off, &gt).unwrap(), 0.75);
        let short = KeyAssignment {
            types: vec![LatchType::Primary],
        };
        assert!(key_accuracy(&short, &gt).is_err());
    }

    #[test]
    fn fc_zero_for_identical_circuits() {
        let n = crate::netlist::parse_bench(crate::gen::S27_BENCH).unwrap();
        let key = KeyAssignment { types: vec![] };
        let fc = functional_corruptibility(
            &n,
            &key,
            &n,
            &FcConfig {
                cycles: 20,
                runs: 3,
                seed: 5,
            },
        );
        assert_eq!(fc, 0.0);
    }
}
