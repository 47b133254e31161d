//! Leave-one-circuit-out experiment matrix: lock every circuit of a suite
//! under `variants` seeds, train phase-1/phase-2/baseline models per
//! held-out circuit on the remaining 18-of-19-style split, attack every
//! held-out variant, and score keys plus ablations.
//!
//! The machine-readable report is byte-deterministic for a fixed config;
//! wall-clock timings are emitted separately so reruns compare equal.

use crate::eval::attack::{
    ablation_single_phase, closest_keys, ground_truth_is_feasible, merge_key, run_attack,
    ClassifierLevel,
};
use crate::eval::{functional_corruptibility, key_accuracy, FcConfig};
use crate::locker::{lock, LockConfig, LockManifest};
use crate::ml::{
    train_forest, train_mlp, Dataset, ForestConfig, LabelScheme, MlpConfig, RandomForest, Sample,
};
use crate::netlist::{GroundTruth, Netlist};
use crate::seqgraph::{self, N_FEATURES};
use crate::simplify;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub variants: u32,
    pub topk: usize,
    pub level: ClassifierLevel,
    pub lock: LockConfig,
    pub forest: ForestConfig,
    pub mlp: MlpConfig,
    pub train_seed: u64,
    pub fc: FcConfig,
    pub run_ablations: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            variants: 11,
            topk: 1000,
            level: ClassifierLevel::Two,
            lock: LockConfig::default(),
            forest: ForestConfig::default(),
            mlp: MlpConfig::default(),
            train_seed: 1,
            fc: FcConfig {
                cycles: 100,
                runs: 10,
                seed: 2,
            },
            run_ablations: true,
        }
    }
}

/// One locked variant with everything precomputed for training.
pub struct LockedVariant {
    pub circuit: String,
    pub variant: u32,
    pub original_index: usize,
    pub locked: Netlist,
    pub gt: GroundTruth,
    pub manifest: LockManifest,
    /// Features on the locked netlist, per latch id.
    pub feats_locked: Vec<[f64; N_FEATURES]>,
    /// Ground-truth-simplified features and the original slot of each.
    pub feats_simplified: Vec<(u32, [f64; N_FEATURES])>,
}

#[derive(Debug, Clone)]
pub struct VariantRow {
    pub circuit: String,
    pub variant: u32,
    pub n_latches: usize,
    pub n_keys: usize,
    pub phase1_acc: f64,
    pub t1_acc: f64,
    pub topk_acc: f64,
    pub fc: f64,
    pub gt_feasible: bool,
    pub closest_acc: f64,
    pub single_t1_acc: f64,
    pub single_topk_acc: f64,
    pub baseline_acc: f64,
    pub seconds: [f64; 4], // phase1, simplify, ilp, fc
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<VariantRow>,
    pub topk: usize,
    pub level: ClassifierLevel,
}

impl ExperimentReport {
    pub fn average<F: Fn(&VariantRow) -> f64>(&self, f: F) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(&f).sum::<f64>() / self.rows.len() as f64
    }

    /// Deterministic machine-readable rows (no timings).
    pub fn to_tsv(&self) -> String {
        let mut s = String::from(
            "circuit\tvariant\tn_keys\tphase1_acc\tt1_acc\ttopk_acc\tfc\tclosest_acc\tsingle_t1_acc\tsingle_topk_acc\tbaseline_acc\tgt_feasible\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
                r.circuit,
                r.variant,
                r.n_keys,
                r.phase1_acc,
                r.t1_acc,
                r.topk_acc,
                r.fc,
                r.closest_acc,
                r.single_t1_acc,
                r.single_topk_acc,
                r.baseline_acc,
                r.gt_feasible as u8,
            );
        }
        let _ = writeln!(
            s,
            "AVERAGE\t-\t-\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t-",
            self.average(|r| r.phase1_acc),
            self.average(|r| r.t1_acc),
            self.average(|r| r.topk_acc),
            self.average(|r| r.fc),
            self.average(|r| r.closest_acc),
            self.average(|r| r.single_t1_acc),
            self.average(|r| r.single_topk_acc),
            self.average(|r| r.baseline_acc),
        );
        s
    }

    pub fn to_timings_tsv(&self) -> String {
        let mut s = String::from("circuit\tvariant\tphase1_s\tsimplify_s\tilp_s\tfc_s\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
                r.circuit, r.variant, r.seconds[0], r.seconds[1], r.seconds[2], r.seconds[3]
            );
        }
        s
    }

    /// Human-readable per-circuit table in the shape of the accuracy/FC
    /// tables: per circuit averaged over variants.
    pub fn to_table(&self) -> String {
        let mut order: Vec<String> = Vec::new();
        for r in &self.rows {
            if !order.contains(&r.circuit) {
                order.push(r.circuit.clone());
            }
        }
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>8} {:>8} {:>8} {:>8} {:>9} {:>10} {:>9}",
            "circuit", "keys", "phase1", "T-1", "T-k", "FC", "closest", "single", "baseline"
        );
        for c in &order {
            let rows: Vec<&VariantRow> = self.rows.iter().filter(|r| &r.circuit == c).collect();
            let n = rows.len() as f64;
            let avg = |f: &dyn Fn(&VariantRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            let _ = writeln!(
                s,
                "{:<10} {:>6} {:>8.1} {:>8.1} {:>8.1} {:>8.2} {:>9.1} {:>10.1} {:>9.1}",
                c,
                rows.iter().map(|r| r.n_keys).sum::<usize>() / rows.len(),
                100.0 * avg(&|r| r.phase1_acc),
                100.0 * avg(&|r| r.t1_acc),
                100.0 * avg(&|r| r.topk_acc),
                100.0 * avg(&|r| r.fc),
                100.0 * avg(&|r| r.closest_acc),
                100.0 * avg(&|r| r.single_topk_acc),
                100.0 * avg(&|r| r.baseline_acc),
            );
        }
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>8.1} {:>8.1} {:>8.1} {:>8.2} {:>9.1} {:>10.1} {:>9.1}",
            "Ave.",
            "-",
            100.0 * self.average(|r| r.phase1_acc),
            100.0 * self.average(|r| r.t1_acc),
            100.0 * self.average(|r| r.topk_acc),
            100.0 * self.average(|r| r.fc),
            100.0 * self.average(|r| r.closest_acc),
            100.0 * self.average(|r| r.single_topk_acc),
            100.0 * self.average(|r| r.baseline_acc),
        );
        s
    }
}

/// Lock every circuit under every variant seed and precompute features.
pub fn lock_suite(
    suite: &[Netlist],
    cfg: &ExperimentConfig,
) -> Result<Vec<LockedVariant>, crate::locker::LockError> {
    let jobs: Vec<(usize, u32)> = (0..suite.len())
        .flat_map(|c| (0..cfg.variants).map(move |v| (c, v)))
        .collect();
    let variants: Vec<Result<LockedVariant, crate::locker::LockError>> = jobs
        .par_iter()
        .map(|&(ci, v)| {
            let mut lc = cfg.lock.clone();
            lc.seed = cfg.lock.seed + v as u64;
            let (locked, gt, manifest) = lock(&suite[ci], &lc)?;
            let feats_locked: Vec<[f64; N_FEATURES]> = seqgraph::featurize(&locked)
                .into_iter()
                .map(|f| f.to_array())
                .collect();
            let true_ld: BTreeSet<u32> = gt
                .types
                .iter()
                .filter(|(_, &t)| t == crate::netlist::LatchType::LogicDecoy)
                .map(|(&id, _)| id)
                .collect();
            let (simp, graph, feats) =
                simplify::simplify_for_phase2(&locked, &true_ld).expect("valid ld ids");
            let _ = graph;
            let feats_simplified: Vec<(u32, [f64; N_FEATURES])> = simp
                .latches
                .iter()
                .zip(&feats)
                .map(|(l, f)| (l.key_index, f.to_array()))
                .collect();
            Ok(LockedVariant {
                circuit: suite[ci].name.clone(),
                variant: v,
                original_index: ci,
                locked,
                gt,
                manifest,
                feats_locked,
                feats_simplified,
            })
        })
        .collect();
    variants.into_iter().collect()
}

fn is_validation_variant(variant: u32) -> bool {
    variant % 10 == 9
}

/// Trained per-held-out-circuit models.
pub struct HeldOutModels {
    pub phase1: RandomForest,
    pub phase2: crate::ml::Mlp,
    pub baseline: crate::ml::Mlp,
}

/// Train phase-1 (RF on locked features, logic decoy vs rest), phase-2
/// (MLP on truth-simplified features) and the 4-class baseline, using every
/// circuit except `held_out`.
pub fn train_for_held_out(
    variants: &[LockedVariant],
    held_out: usize,
    cfg: &ExperimentConfig,
) -> Result<HeldOutModels, crate::ml::MlError> {
    let phase2_scheme = match cfg.level {
        ClassifierLevel::Two => LabelScheme::DdVsPs,
        ClassifierLevel::Three => LabelScheme::Psd,
    };
    let mut p1_samples = Vec::new();
    let mut p2_train: Vec<(Vec<f64>, u32)> = Vec::new();
    let mut p2_val: Vec<(Vec<f64>, u32)> = Vec::new();
    let mut b4_train: Vec<(Vec<f64>, u32)> = Vec::new();
    let mut b4_val: Vec<(Vec<f64>, u32)> = Vec::new();

    for lv in variants.iter().filter(|lv| lv.original_index != held_out) {
        let circuit_id = format!("{}#{}", lv.circuit, lv.variant);
        for (li, f) in lv.feats_locked.iter().enumerate() {
            let ty = lv.gt.get(li as u32).unwrap();
            p1_samples.push(Sample {
                circuit: circuit_id.clone(),
                latch_id: li as u32,
                features: *f,
                label: LabelScheme::LdVsRest.label_of(ty).unwrap(),
            });
            let row = (f.to_vec(), LabelScheme::FourClass.label_of(ty).unwrap());
            if is_validation_variant(lv.variant) {
                b4_val.push(row);
            } else {
                b4_train.push(row);
            }
        }
        for (slot, f) in &lv.feats_simplified {
            let ty = lv.gt.get(*slot).unwrap();
            let Some(label) = phase2_scheme.label_of(ty) else {
                continue;
            };
            let row = (f.to_vec(), label);
            if is_validation_variant(lv.variant) {
                p2_val.push(row);
            } else {
                p2_train.push(row);
            }
        }
    }

    let p1_ds = Dataset::new(p1_samples, 2)?;
    let mut fc = cfg.forest;
    fc.seed = cfg.train_seed.wrapping_add(held_out as u64 * 3);
    let phase1 = train_forest(&p1_ds, &fc)?;

    let mut m2 = cfg.mlp.clone();
    m2.seed = cfg.train_seed.wrapping_add(held_out as u64 * 3 + 1);
    let phase2 = train_mlp(
        &p2_train,
        if p2_val.is_empty() { &p2_train } else { &p2_val },
        phase2_scheme.n_classes(),
        &m2,
    )?;

    let mut m4 = cfg.mlp.clone();
    m4.seed = cfg.train_seed.wrapping_add(held_out as u64 * 3 + 2);
    let baseline = train_mlp(
        &b4_train,
        if b4_val.is_empty() { &b4_train } else { &b4_val },
        4,
        &m4,
    )?;

    Ok(HeldOutModels {
        phase1,
        phase2,
        baseline,
    })
}

/// Run the whole matrix over a suite of circuits.
pub fn run_experiment(
    suite: &[Netlist],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, String> {
    let variants = lock_suite(suite, cfg).map_err(|e| e.to_string())?;
    let per_circuit: Vec<Result<Vec<VariantRow>, String>> = (0..suite.len())
        .into_par_iter()
        .map(|held_out| {
            let models =
                train_for_held_out(&variants, held_out, cfg).map_err(|e| e.to_string())?;
            let mut rows = Vec::new();
            for lv in variants.iter().filter(|lv| lv.original_index == held_out) {
                let t_fc = std::time::Instant::now();
                let outcome = run_attack(
                    &lv.locked,
                    &lv.gt,
                    &models.phase1,
                    &models.phase2,
                    cfg.level,
                    cfg.topk,
                    None,
                    &cfg.fc,
                )
                .map_err(|e| e.to_string())?;
                let fc = functional_corruptibility(
                    &lv.locked,
                    &outcome.best_key,
                    &suite[held_out],
                    &cfg.fc,
                );
                let seconds_fc = t_fc.elapsed().as_secs_f64();

                let (closest_acc, single_t1, single_best, baseline_acc) = if cfg.run_ablations {
                    // Closest-key pool merged with phase-1 predictions,
                    // scored like the ILP pool.
                    let pool = closest_keys(&outcome.coefs, cfg.topk);
                    let closest = pool
                        .iter()
                        .map(|types| {
                            let key = merge_key(
                                lv.locked.latches.len(),
                                &outcome.predicted_ld,
                                &outcome.slots,
                                types,
                            );
                            key_accuracy(&key, &lv.gt).unwrap()
                        })
                        .fold(0.0, f64::max);
                    let sp = ablation_single_phase(&lv.locked, &lv.gt, &models.baseline, cfg.topk)
                        .map_err(|e| e.to_string())?;
                    (closest, sp.t1_accuracy, sp.best_accuracy, sp.baseline_accuracy)
                } else {
                    (0.0, 0.0, 0.0, 0.0)
                };

                rows.push(VariantRow {
                    circuit: lv.circuit.clone(),
                    variant: lv.variant,
                    n_latches: lv.locked.latches.len(),
                    n_keys: lv.manifest.n_keys,
                    phase1_acc: outcome.phase1_accuracy,
                    t1_acc: outcome.t1_accuracy,
                    topk_acc: outcome.best_accuracy,
                    fc,
                    gt_feasible: outcome.ground_truth_feasible,
                    closest_acc,
                    single_t1_acc: single_t1,
                    single_topk_acc: single_best,
                    baseline_acc,
                    seconds: [
                        outcome.seconds_phase1,
                        outcome.seconds_simplify,
                        outcome.seconds_ilp,
                        seconds_fc,
                    ],
                });
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_circuit {
        rows.extend(r?);
    }
    Ok(ExperimentReport {
        rows,
        topk: cfg.topk,
        level: cfg.level,
    })
}

/// Locking soundness sweep used by the acceptance gate: FC of the
/// ground-truth key must be exactly 0 on every variant.
pub fn locking_soundness(
    suite: &[Netlist],
    cfg: &ExperimentConfig,
) -> Result<Vec<(String, u32, f64)>, String> {
    let variants = lock_suite(suite, cfg).map_err(|e| e.to_string())?;
    Ok(variants
        .par_iter()
        .map(|lv| {
            let key = crate::eval::KeyAssignment::from_ground_truth(&lv.gt);
            let fc = functional_corruptibility(
                &lv.locked,
                &key,
                &suite[lv.original_index],
                &cfg.fc,
            );
            (lv.circuit.clone(), lv.variant, fc)
        })
        .collect())
}

/// Constraint soundness sweep: ground truth feasible on every variant.
pub fn constraint_soundness(
    suite: &[Netlist],
    cfg: &ExperimentConfig,
) -> Result<Vec<(String, u32, bool)>, String> {
    let variants = lock_suite(suite, cfg).map_err(|e| e.to_string())?;
    variants
        .par_iter()
        .map(|lv| {
            let ok = ground_truth_is_feasible(&lv.locked, &lv.gt).map_err(|e| e.to_string())?;
            Ok((lv.circuit.clone(), lv.variant, ok))
        })
        .collect()
}
