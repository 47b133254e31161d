//! From-scratch classifiers: a random forest for phase 1 and an MLP with a
//! softmax head for phase 2 and the single-stage baseline.

pub mod forest;
pub mod io;
pub mod mlp;

pub use forest::{train_forest, ForestConfig, RandomForest};
pub use mlp::{train_mlp, Mlp, MlpConfig};

use crate::netlist::LatchType;
use crate::seqgraph::N_FEATURES;

#[derive(Debug, thiserror::Error)]
pub enum MlError {
    #[error("dataset has a single class; nothing to learn")]
    SingleClass,
    #[error("dataset is empty")]
    Empty,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("feature dimension mismatch: model {model}, input {input}")]
    DimensionMismatch { model: usize, input: usize },
    #[error("duplicate sample key {0}")]
    DuplicateKey(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelRange { label: u32, classes: usize },
    #[error("model file malformed: {0}")]
    BadModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How ground-truth latch types map onto class indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelScheme {
    /// Phase 1: 0 = not a logic decoy, 1 = logic decoy.
    LdVsRest,
    /// Phase 2, 2-level: 0 = primary/secondary, 1 = delay decoy.
    DdVsPs,
    /// Phase 2, 3-level: 0 = primary, 1 = secondary, 2 = delay decoy.
    Psd,
    /// Single-stage baseline: 0 = P, 1 = S, 2 = DD, 3 = LD.
    FourClass,
}

impl LabelScheme {
    pub fn n_classes(self) -> usize {
        match self {
            LabelScheme::LdVsRest | LabelScheme::DdVsPs => 2,
            LabelScheme::Psd => 3,
            LabelScheme::FourClass => 4,
        }
    }

    /// Class index for a latch type; `None` when the type is outside the
    /// scheme's universe (logic decoys in phase-2 schemes).
    pub fn label_of(self, ty: LatchType) -> Option<u32> {
        match self {
            LabelScheme::LdVsRest => Some(if ty == LatchType::LogicDecoy { 1 } else { 0 }),
            LabelScheme::DdVsPs => match ty {
                LatchType::Primary | LatchType::Secondary => Some(0),
                LatchType::DelayDecoy => Some(1),
                LatchType::LogicDecoy => None,
            },
            LabelScheme::Psd => match ty {
                LatchType::Primary => Some(0),
                LatchType::Secondary => Some(1),
                LatchType::DelayDecoy => Some(2),
                LatchType::LogicDecoy => None,
            },
            LabelScheme::FourClass => Some(match ty {
                LatchType::Primary => 0,
                LatchType::Secondary => 1,
                LatchType::DelayDecoy => 2,
                LatchType::LogicDecoy => 3,
            }),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            LabelScheme::LdVsRest => "ld_vs_rest",
            LabelScheme::DdVsPs => "dd_vs_ps",
            LabelScheme::Psd => "psd",
            LabelScheme::FourClass => "four_class",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "ld_vs_rest" => LabelScheme::LdVsRest,
            "dd_vs_ps" => LabelScheme::DdVsPs,
            "psd" => LabelScheme::Psd,
            "four_class" => LabelScheme::FourClass,
            _ => return None,
        })
    }
}

/// One training row: a latch of one circuit variant.
#[derive(Debug, Clone)]
pub struct Sample {
    /// Circuit id, e.g. `s27#3` for variant seed 3.
    pub circuit: String,
    pub latch_id: u32,
    pub features: [f64; N_FEATURES],
    pub label: u32,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, n_classes: usize) -> Result<Self, MlError> {
        let mut keys = std::collections::BTreeSet::new();
        for s in &samples {
            if s.label as usize >= n_classes {
                return Err(MlError::LabelRange {
                    label: s.label,
                    classes: n_classes,
                });
            }
            if !keys.insert((s.circuit.clone(), s.latch_id)) {
                return Err(MlError::DuplicateKey(format!("{}:{}", s.circuit, s.latch_id)));
            }
        }
        Ok(Dataset { samples, n_classes })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.n_classes];
        for s in &self.samples {
            c[s.label as usize] += 1;
        }
        c
    }

    /// Inverse-frequency class weights (mean weight 1 over present classes).
    pub fn class_weights(&self) -> Vec<f64> {
        let counts = self.class_counts();
        let present = counts.iter().filter(|&&c| c > 0).count().max(1);
        let n = self.len() as f64;
        counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    0.0
                } else {
                    n / (present as f64 * c as f64)
                }
            })
            .collect()
    }
}

/// The dataset row format shared by the `extract-features` CLI and the
/// trainers: circuit id, latch id, the 14 features, then the ground-truth
/// type token (or `?` when unavailable).
pub fn format_row(circuit: &str, latch_id: u32, features: &[f64; N_FEATURES], label: Option<LatchType>) -> String {
    let mut fields = vec![circuit.to_string(), latch_id.to_string()];
    fields.extend(features.iter().map(|f| format!("{f:.6}")));
    fields.push(label.map_or_else(|| "?".to_string(), |t| t.token().to_string()));
    fields.join("\t")
}

/// One parsed dataset row: circuit id, latch id, features, type.
pub type FeatureRow = (String, u32, [f64; N_FEATURES], Option<LatchType>);

/// Parse rows back into (circuit, latch, features, type).
pub fn parse_rows(text: &str) -> Result<Vec<FeatureRow>, MlError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 + N_FEATURES + 1 {
            return Err(MlError::BadModelFile(format!(
                "row {}: expected {} fields, got {}",
                lineno + 1,
                3 + N_FEATURES,
                fields.len()
            )));
        }
        let latch_id: u32 = fields[1]
            .parse()
            .map_err(|_| MlError::BadModelFile(format!("row {}: bad latch id", lineno + 1)))?;
        let mut features = [0.0; N_FEATURES];
        for (i, f) in features.iter_mut().enumerate() {
            *f = fields[2 + i].parse().map_err(|_| {
                MlError::BadModelFile(format!("row {}: bad feature {}", lineno + 1, i + 1))
            })?;
        }
        let label = match fields[2 + N_FEATURES] {
            "?" => None,
            tok => Some(LatchType::from_token(tok).ok_or_else(|| {
                MlError::BadModelFile(format!("row {}: bad label `{tok}`", lineno + 1))
            })?),
        };
        out.push((fields[0].to_string(), latch_id, features, label));
    }
    Ok(out)
}

/// Either trained model behind one inference surface.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Forest(RandomForest),
    Mlp(Mlp),
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        match self {
            TrainedModel::Forest(f) => f.n_classes,
            TrainedModel::Mlp(m) => m.n_classes(),
        }
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, MlError> {
        match self {
            TrainedModel::Forest(f) => f.predict_proba(features),
            TrainedModel::Mlp(m) => m.predict_proba(features),
        }
    }

    pub fn predict(&self, features: &[f64]) -> Result<u32, MlError> {
        let p = self.predict_proba(features)?;
        Ok(argmax(&p) as u32)
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_roundtrip() {
        let feats = [0.5; N_FEATURES];
        let row = format_row("s27#0", 3, &feats, Some(LatchType::DelayDecoy));
        let parsed = parse_rows(&row).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].0, "s27#0");
        assert_eq!(parsed[0].1, 3);
        assert_eq!(parsed[0].3, Some(LatchType::DelayDecoy));
    }

    #[test]
    fn dataset_rejects_duplicates_and_bad_labels() {
        let s = Sample {
            circuit: "c".into(),
            latch_id: 0,
            features: [0.0; N_FEATURES],
            label: 0,
        };
        assert!(Dataset::new(vec![s.clone(), s.clone()], 2).is_err());
        let bad = Sample { label: 5, ..s };
        assert!(Dataset::new(vec![bad], 2).is_err());
    }
}
