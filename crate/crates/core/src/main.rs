//! `latchlock` — lock benchmark circuits and attack them.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use latchlock::eval::attack::{
    ablation_single_phase, closest_keys, format_key_pool, merge_key, run_attack, ClassifierLevel,
};
use latchlock::eval::{functional_corruptibility, key_accuracy, FcConfig, KeyAssignment};
use latchlock::experiment::{run_experiment, ExperimentConfig};
use latchlock::locker::{lock, DecoyStyle, LockConfig};
use latchlock::ml::{
    io::{load_model, save_model},
    train_forest, train_mlp, Dataset, ForestConfig, LabelScheme, MlpConfig, Sample, TrainedModel,
};
use latchlock::netlist::{parse_bench, parse_locked, write_locked, LatchType, Netlist};
use latchlock::seqgraph;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "latchlock", version, about = "Latch-based logic locking and a two-phase oracle-less attack")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lock a .bench circuit; writes locked netlist, ground truth, manifest.
    Lock {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        ff_fraction: f64,
        #[arg(long, default_value_t = 0.25)]
        delay_decoy_rate: f64,
        #[arg(long, default_value_t = 0.25)]
        logic_decoy_rate: f64,
        /// Comma-separated subset of MUX,OR,XOR.
        #[arg(long, default_value = "MUX,OR,XOR")]
        styles: String,
    },
    /// Emit one feature row per latch (the training-set format).
    ExtractFeatures {
        #[arg(long = "in")]
        input: PathBuf,
        /// Ground-truth sidecar; rows carry `?` labels without it.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Remove the sidecar's logic decoys and simplify before featurizing.
        #[arg(long, default_value_t = false)]
        simplified: bool,
    },
    /// Train a model from feature rows.
    Train {
        #[arg(long)]
        rows: PathBuf,
        /// ld_vs_rest | dd_vs_ps | psd | four_class
        #[arg(long)]
        scheme: String,
        /// forest | mlp (default: forest for ld_vs_rest, mlp otherwise)
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the two-phase attack on one locked circuit.
    Attack {
        #[arg(long)]
        locked: PathBuf,
        /// Sidecar; enables accuracy scoring.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        phase1: PathBuf,
        #[arg(long)]
        phase2: PathBuf,
        #[arg(long, default_value_t = 10000)]
        topk: usize,
        /// Original circuit; enables functional corruptibility of the best key.
        #[arg(long)]
        original: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        fc_cycles: usize,
        #[arg(long, default_value_t = 10)]
        fc_runs: usize,
        #[arg(long, default_value_t = 2)]
        fc_seed: u64,
    },
    /// Score a key pool against ground truth and the original circuit.
    Evaluate {
        #[arg(long)]
        locked: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        original: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        cycles: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the closest-key and single-phase ablations on one circuit.
    Ablation {
        #[arg(long)]
        locked: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        phase1: PathBuf,
        #[arg(long)]
        phase2: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long, default_value_t = 10000)]
        topk: usize,
    },
    /// Leave-one-circuit-out matrix over a suite; emits the report files.
    Experiment {
        /// Key-value run file; flags below override nothing once given.
        #[arg(long)]
        run_file: Option<PathBuf>,
        /// `small` for the built-in suite, or a directory of .bench files
        /// (default from LATCHLOCK_BENCH_DIR).
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 11)]
        variants: u32,
        #[arg(long, default_value_t = 1000)]
        topk: usize,
        /// 2 or 3 (phase-2 classifier levels).
        #[arg(long, default_value_t = 2)]
        level: u32,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 = library default.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text.as_ref()).with_context(|| format!("writing {}", path.display()))
}

fn load_bench(path: &Path) -> Result<Netlist> {
    let mut n = parse_bench(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if n.name == "netlist" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            n.name = stem.to_string();
        }
    }
    Ok(n)
}

fn parse_styles(s: &str) -> Result<Vec<DecoyStyle>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| DecoyStyle::from_token(t).ok_or_else(|| anyhow!("unknown decoy style `{t}`")))
        .collect()
}

fn parse_key_pool(text: &str, n_latches: usize) -> Result<Vec<(f64, KeyAssignment)>> {
    let mut pools = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let objective: f64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| anyhow!("keys line {}: bad objective", lineno + 1))?;
        let mut types = vec![None; n_latches];
        for f in fields {
            let parts: Vec<&str> = f.split(':').collect();
            if parts.len() != 3 {
                bail!("keys line {}: bad triple `{f}`", lineno + 1);
            }
            let slot: usize = parts[0].parse().context("bad latch id")?;
            let ty = LatchType::from_token(parts[1])
                .ok_or_else(|| anyhow!("keys line {}: bad type `{}`", lineno + 1, parts[1]))?;
            if slot >= n_latches {
                bail!("keys line {}: latch {slot} out of range", lineno + 1);
            }
            types[slot] = Some(ty);
        }
        let types: Option<Vec<LatchType>> = types.into_iter().collect();
        let types = types.ok_or_else(|| anyhow!("keys line {}: incomplete key", lineno + 1))?;
        pools.push((objective, KeyAssignment { types }));
    }
    Ok(pools)
}

fn rows_to_dataset(rows: &[latchlock::ml::FeatureRow], scheme: LabelScheme) -> Result<Dataset> {
    let mut samples = Vec::new();
    for (circuit, latch, feats, label) in rows {
        let Some(ty) = label else {
            bail!("row {circuit}:{latch} is unlabeled; cannot train");
        };
        let Some(label) = scheme.label_of(*ty) else {
            continue; // out of scheme universe (logic decoys in phase 2)
        };
        samples.push(Sample {
            circuit: circuit.clone(),
            latch_id: *latch,
            features: *feats,
            label,
        });
    }
    Ok(Dataset::new(samples, scheme.n_classes())?)
}

fn load_mlp(path: &Path) -> Result<(latchlock::ml::Mlp, LabelScheme)> {
    let (model, scheme) = load_model(&std::fs::read(path)?)?;
    match model {
        TrainedModel::Mlp(m) => Ok((m, scheme)),
        _ => bail!("{} is not an MLP model", path.display()),
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Command::Lock {
            input,
            out,
            seed,
            ff_fraction,
            delay_decoy_rate,
            logic_decoy_rate,
            styles,
        } => {
            let netlist = load_bench(&input)?;
            let cfg = LockConfig {
                seed,
                ff_fraction,
                delay_decoy_rate,
                logic_decoy_rate,
                logic_decoy_styles: parse_styles(&styles)?,
            };
            let (locked, gt, manifest) = lock(&netlist, &cfg)?;
            let (bench, sidecar) = write_locked(&locked, &gt)?;
            let stem = format!("{}_locked_s{}", netlist.name, seed);
            write_file(&out.join(format!("{stem}.bench")), bench)?;
            write_file(&out.join(format!("{stem}.truth")), sidecar)?;
            write_file(&out.join(format!("{stem}.manifest")), manifest.to_text())?;
            println!(
                "locked {}: {} latches ({} P, {} S, {} DD, {} LD), {} key bits",
                netlist.name,
                locked.latches.len(),
                manifest.n_primary,
                manifest.n_secondary,
                manifest.n_delay_decoys,
                manifest.n_logic_decoys,
                manifest.n_keys
            );
        }
        Command::ExtractFeatures {
            input,
            truth,
            out,
            simplified,
        } => {
            let text = read(&input)?;
            let (netlist, gt) = match &truth {
                Some(tp) => {
                    let (n, gt) = parse_locked(&text, &read(tp)?)
                        .map_err(|e| anyhow!("{}: {e}", input.display()))?;
                    (n, Some(gt))
                }
                None => (
                    parse_bench(&text).map_err(|e| anyhow!("{}: {e}", input.display()))?,
                    None,
                ),
            };
            let circuit_id = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("netlist")
                .to_string();
            let mut rows = String::new();
            if simplified {
                let gt = gt
                    .as_ref()
                    .ok_or_else(|| anyhow!("--simplified requires --truth"))?;
                let true_ld: BTreeSet<u32> = gt
                    .types
                    .iter()
                    .filter(|(_, &t)| t == LatchType::LogicDecoy)
                    .map(|(&id, _)| id)
                    .collect();
                let (simp, _, feats) = latchlock::simplify::simplify_for_phase2(&netlist, &true_ld)?;
                for (l, f) in simp.latches.iter().zip(&feats) {
                    rows.push_str(&latchlock::ml::format_row(
                        &circuit_id,
                        l.key_index,
                        &f.to_array(),
                        gt.get(l.key_index),
                    ));
                    rows.push('\n');
                }
            } else {
                for (li, f) in seqgraph::featurize(&netlist).iter().enumerate() {
                    let label = gt.as_ref().and_then(|g| g.get(li as u32));
                    rows.push_str(&latchlock::ml::format_row(
                        &circuit_id,
                        li as u32,
                        &f.to_array(),
                        label,
                    ));
                    rows.push('\n');
                }
            }
            write_file(&out, rows)?;
        }
        Command::Train {
            rows,
            scheme,
            kind,
            model_out,
            seed,
        } => {
            let scheme = LabelScheme::from_token(&scheme)
                .ok_or_else(|| anyhow!("unknown scheme `{scheme}`"))?;
            let parsed = latchlock::ml::parse_rows(&read(&rows)?)?;
            let dataset = rows_to_dataset(&parsed, scheme)?;
            let kind = kind.unwrap_or_else(|| {
                if scheme == LabelScheme::LdVsRest {
                    "forest".into()
                } else {
                    "mlp".into()
                }
            });
            let model = match kind.as_str() {
                "forest" => TrainedModel::Forest(train_forest(
                    &dataset,
                    &ForestConfig {
                        seed,
                        ..Default::default()
                    },
                )?),
                "mlp" => {
                    let rows: Vec<(Vec<f64>, u32)> = dataset
                        .samples
                        .iter()
                        .map(|s| (s.features.to_vec(), s.label))
                        .collect();
                    TrainedModel::Mlp(train_mlp(
                        &rows,
                        &rows,
                        dataset.n_classes,
                        &MlpConfig {
                            seed,
                            ..Default::default()
                        },
                    )?)
                }
                other => bail!("unknown model kind `{other}`"),
            };
            write_file(&model_out, save_model(&model, scheme))?;
            if let TrainedModel::Forest(f) = &model {
                println!("trained forest, oob accuracy {:.3}", f.oob_accuracy);
            } else {
                println!("trained mlp on {} samples", dataset.len());
            }
        }
        Command::Attack {
            locked,
            truth,
            phase1,
            phase2,
            topk,
            original,
            out,
            fc_cycles,
            fc_runs,
            fc_seed,
        } => {
            let text = read(&locked)?;
            let (netlist, gt) = match &truth {
                Some(tp) => parse_locked(&text, &read(tp)?)
                    .map_err(|e| anyhow!("{}: {e}", locked.display()))?,
                None => {
                    // Without ground truth, scoring is skipped; synthesize a
                    // vacuous truth so the pipeline types check out.
                    let n =
                        parse_bench(&text).map_err(|e| anyhow!("{}: {e}", locked.display()))?;
                    let mut gt = latchlock::netlist::GroundTruth::default();
                    for i in 0..n.latches.len() as u32 {
                        gt.types.insert(i, LatchType::DelayDecoy);
                    }
                    (n, gt)
                }
            };
            let (p1_model, p1_scheme) = load_model(&std::fs::read(&phase1)?)?;
            let TrainedModel::Forest(p1) = p1_model else {
                bail!("--phase1 must be a forest model");
            };
            if p1_scheme != LabelScheme::LdVsRest {
                bail!("--phase1 model has scheme {}, want ld_vs_rest", p1_scheme.token());
            }
            let (p2, p2_scheme) = load_mlp(&phase2)?;
            let level = match p2_scheme {
                LabelScheme::DdVsPs => ClassifierLevel::Two,
                LabelScheme::Psd => ClassifierLevel::Three,
                other => bail!("--phase2 model has scheme {}, want dd_vs_ps or psd", other.token()),
            };
            let orig = original.as_deref().map(load_bench).transpose()?;
            let fc = FcConfig {
                cycles: fc_cycles,
                runs: fc_runs,
                seed: fc_seed,
            };
            let outcome = run_attack(&netlist, &gt, &p1, &p2, level, topk, orig.as_ref(), &fc)?;
            let keys_text = format_key_pool(
                &outcome.pool,
                &outcome.slots,
                &outcome.predicted_ld,
                netlist.latches.len(),
            );
            write_file(&out.join("keys.txt"), keys_text)?;
            let mut report = String::new();
            report.push_str(&format!("circuit = {}\n", netlist.name));
            report.push_str(&format!("latches = {}\n", netlist.latches.len()));
            report.push_str(&format!("pool = {}\n", outcome.pool.entries.len()));
            if truth.is_some() {
                report.push_str(&format!("phase1_accuracy = {:.4}\n", outcome.phase1_accuracy));
                report.push_str(&format!("t1_accuracy = {:.4}\n", outcome.t1_accuracy));
                report.push_str(&format!("best_accuracy = {:.4}\n", outcome.best_accuracy));
                report.push_str(&format!(
                    "ground_truth_feasible = {}\n",
                    outcome.ground_truth_feasible
                ));
            }
            if let Some(fc) = outcome.fc_best {
                report.push_str(&format!("fc_best = {:.4}\n", fc));
            }
            report.push_str(&format!(
                "seconds = phase1 {:.3} simplify {:.3} ilp {:.3}\n",
                outcome.seconds_phase1, outcome.seconds_simplify, outcome.seconds_ilp
            ));
            write_file(&out.join("report.txt"), &report)?;
            print!("{report}");
        }
        Command::Evaluate {
            locked,
            truth,
            keys,
            original,
            cycles,
            runs,
            seed,
        } => {
            let (netlist, gt) = parse_locked(&read(&locked)?, &read(&truth)?)
                .map_err(|e| anyhow!("{}: {e}", locked.display()))?;
            let pool = parse_key_pool(&read(&keys)?, netlist.latches.len())?;
            if pool.is_empty() {
                bail!("keys file {} holds no keys", keys.display());
            }
            let mut best: Option<(f64, &KeyAssignment)> = None;
            for (i, (objective, key)) in pool.iter().enumerate() {
                let acc = key_accuracy(key, &gt)?;
                println!("key {:>4}  objective {:>10.6}  accuracy {:.4}", i, objective, acc);
                if best.is_none_or(|(a, _)| acc > a) {
                    best = Some((acc, key));
                }
            }
            let (best_acc, best_key) = best.unwrap();
            println!("best_accuracy {best_acc:.4}");
            if let Some(orig) = original {
                let orig = load_bench(&orig)?;
                let fc = functional_corruptibility(
                    &netlist,
                    best_key,
                    &orig,
                    &FcConfig { cycles, runs, seed },
                );
                println!("fc_best {fc:.4}");
            }
        }
        Command::Ablation {
            locked,
            truth,
            phase1,
            phase2,
            baseline,
            topk,
        } => {
            let (netlist, gt) = parse_locked(&read(&locked)?, &read(&truth)?)
                .map_err(|e| anyhow!("{}: {e}", locked.display()))?;
            let (p1_model, _) = load_model(&std::fs::read(&phase1)?)?;
            let TrainedModel::Forest(p1) = p1_model else {
                bail!("--phase1 must be a forest model");
            };
            let (p2, p2_scheme) = load_mlp(&phase2)?;
            let level = match p2_scheme {
                LabelScheme::DdVsPs => ClassifierLevel::Two,
                _ => ClassifierLevel::Three,
            };
            let (b4, _) = load_mlp(&baseline)?;
            let fc = FcConfig::default();
            let outcome = run_attack(&netlist, &gt, &p1, &p2, level, topk, None, &fc)?;
            let pool = closest_keys(&outcome.coefs, topk);
            let closest = pool
                .iter()
                .map(|types| {
                    let key = merge_key(
                        netlist.latches.len(),
                        &outcome.predicted_ld,
                        &outcome.slots,
                        types,
                    );
                    key_accuracy(&key, &gt).unwrap()
                })
                .fold(0.0, f64::max);
            let sp = ablation_single_phase(&netlist, &gt, &b4, topk)?;
            println!("two_phase_topk {:.4}", outcome.best_accuracy);
            println!("closest_keys_topk {closest:.4}");
            println!("single_phase_topk {:.4}", sp.best_accuracy);
            println!("baseline_argmax {:.4}", sp.baseline_accuracy);
        }
        Command::Experiment {
            run_file,
            suite,
            variants,
            topk,
            level,
            out,
            workers,
        } => {
            let mut cfg = ExperimentConfig {
                variants,
                topk,
                level: match level {
                    2 => ClassifierLevel::Two,
                    3 => ClassifierLevel::Three,
                    other => bail!("--level must be 2 or 3, got {other}"),
                },
                ..Default::default()
            };
            let mut suite_name = suite.unwrap_or_else(|| {
                std::env::var("LATCHLOCK_BENCH_DIR").unwrap_or_else(|_| "small".into())
            });
            let mut workers = workers;
            if let Some(rf) = run_file {
                (cfg, suite_name, workers) = parse_run_file(&read(&rf)?, cfg, suite_name)?;
            }
            if workers > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global()
                    .ok();
            }
            let circuits = if suite_name == "small" {
                latchlock::gen::small_suite()
            } else {
                let mut list = Vec::new();
                let mut entries: Vec<PathBuf> = std::fs::read_dir(&suite_name)
                    .with_context(|| format!("reading suite dir {suite_name}"))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "bench"))
                    .collect();
                entries.sort();
                for p in entries {
                    list.push(load_bench(&p)?);
                }
                if list.is_empty() {
                    bail!("suite dir {suite_name} holds no .bench files");
                }
                list
            };

            let report = run_experiment(&circuits, &cfg).map_err(|e| anyhow!(e))?;
            write_file(&out.join("report.tsv"), report.to_tsv())?;
            write_file(&out.join("timings.tsv"), report.to_timings_tsv())?;
            write_file(&out.join("report.txt"), report.to_table())?;
            // Locked artifacts and the run manifest.
            let locked_dir = out.join("locked");
            let variants_arts = latchlock::experiment::lock_suite(&circuits, &cfg)
                .map_err(|e| anyhow!("{e}"))?;
            let mut manifest = String::new();
            manifest.push_str(&format!("suite = {suite_name}\n"));
            manifest.push_str(&format!("variants = {}\n", cfg.variants));
            manifest.push_str(&format!("topk = {}\n", cfg.topk));
            manifest.push_str(&format!(
                "level = {}\n",
                if cfg.level == ClassifierLevel::Two { 2 } else { 3 }
            ));
            manifest.push_str(&format!("lock.seed = {}\n", cfg.lock.seed));
            manifest.push_str(&format!("lock.ff_fraction = {}\n", cfg.lock.ff_fraction));
            manifest.push_str(&format!("lock.delay_decoy_rate = {}\n", cfg.lock.delay_decoy_rate));
            manifest.push_str(&format!("lock.logic_decoy_rate = {}\n", cfg.lock.logic_decoy_rate));
            manifest.push_str(&format!("train.seed = {}\n", cfg.train_seed));
            manifest.push_str(&format!("fc.seed = {}\n", cfg.fc.seed));
            manifest.push_str(&format!("fc.cycles = {}\n", cfg.fc.cycles));
            manifest.push_str(&format!("fc.runs = {}\n", cfg.fc.runs));
            for lv in &variants_arts {
                let stem = format!("{}_s{}", lv.circuit, lv.manifest.seed);
                let (bench, sidecar) = write_locked(&lv.locked, &lv.gt)?;
                write_file(&locked_dir.join(format!("{stem}.bench")), bench)?;
                write_file(&locked_dir.join(format!("{stem}.truth")), sidecar)?;
                write_file(&locked_dir.join(format!("{stem}.manifest")), lv.manifest.to_text())?;
                manifest.push_str(&format!("artifact = locked/{stem}.bench\n"));
            }
            write_file(&out.join("run_manifest.txt"), manifest)?;
            print!("{}", report.to_table());
        }
    }
    Ok(())
}

fn parse_run_file(
    text: &str,
    mut cfg: ExperimentConfig,
    mut suite: String,
) -> Result<(ExperimentConfig, String, usize)> {
    let mut workers = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("run file line {}: expected key = value", lineno + 1))?;
        let (k, v) = (k.trim(), v.trim());
        let bad = || anyhow!("run file line {}: bad value for {k}", lineno + 1);
        match k {
            "suite" => suite = v.to_string(),
            "variants" => cfg.variants = v.parse().map_err(|_| bad())?,
            "topk" => cfg.topk = v.parse().map_err(|_| bad())?,
            "level" => {
                cfg.level = match v {
                    "2" => ClassifierLevel::Two,
                    "3" => ClassifierLevel::Three,
                    _ => return Err(bad()),
                }
            }
            "workers" => workers = v.parse().map_err(|_| bad())?,
            "lock.seed" => cfg.lock.seed = v.parse().map_err(|_| bad())?,
            "lock.ff_fraction" => cfg.lock.ff_fraction = v.parse().map_err(|_| bad())?,
            "lock.delay_decoy_rate" => cfg.lock.delay_decoy_rate = v.parse().map_err(|_| bad())?,
            "lock.logic_decoy_rate" => cfg.lock.logic_decoy_rate = v.parse().map_err(|_| bad())?,
            "lock.styles" => cfg.lock.logic_decoy_styles = parse_styles(v)?,
            "train.seed" => cfg.train_seed = v.parse().map_err(|_| bad())?,
            "fc.seed" => cfg.fc.seed = v.parse().map_err(|_| bad())?,
            "fc.cycles" => cfg.fc.cycles = v.parse().map_err(|_| bad())?,
            "fc.runs" => cfg.fc.runs = v.parse().map_err(|_| bad())?,
            other => bail!("run file line {}: unknown key `{other}`", lineno + 1),
        }
    }
    Ok((cfg, suite, workers))
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // I/O problems exit 2, validation problems exit 1.
            let io = e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some());
            ExitCode::from(if io { 2 } else { 1 })
        }
    }
}
