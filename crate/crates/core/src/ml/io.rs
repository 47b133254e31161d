//! Model persistence: a text header (kind, classes, scheme, arch,
//! standardization, seed) followed by a little-endian binary payload,
//! separated by a `---` line.

use super::forest::{DecisionTree, ForestConfig, TreeNode};
use super::mlp::{Layer, Mlp, Standardizer};
use super::{LabelScheme, MlError, RandomForest, TrainedModel};
use std::collections::BTreeMap;
use std::io::Write;

const MAGIC: &str = "latchlock-model v1";
const SEP: &[u8] = b"---\n";

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MlError> {
        if self.at + n > self.buf.len() {
            return Err(MlError::BadModelFile("binary payload truncated".into()));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, MlError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, MlError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, MlError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, MlError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Serialize a model (with its label scheme) to bytes.
pub fn save_model(model: &TrainedModel, scheme: LabelScheme) -> Vec<u8> {
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("scheme = {}\n", scheme.token()));
    let mut bin = Vec::new();
    match model {
        TrainedModel::Forest(f) => {
            header.push_str("kind = forest\n");
            header.push_str(&format!("classes = {}\n", f.n_classes));
            header.push_str(&format!("features = {}\n", f.n_features));
            header.push_str(&format!("trees = {}\n", f.config.n_trees));
            header.push_str(&format!("max_depth = {}\n", f.config.max_depth));
            header.push_str(&format!("min_leaf = {}\n", f.config.min_leaf));
            header.push_str(&format!("split_candidates = {}\n", f.config.n_feature_candidates));
            header.push_str(&format!("class_weighted = {}\n", f.config.class_weighted));
            header.push_str(&format!("seed = {}\n", f.config.seed));
            header.push_str(&format!("oob_accuracy = {:.6}\n", f.oob_accuracy));
            bin.extend_from_slice(&(f.trees.len() as u32).to_le_bytes());
            for t in &f.trees {
                bin.extend_from_slice(&(t.nodes.len() as u32).to_le_bytes());
                for n in &t.nodes {
                    match *n {
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            bin.push(0);
                            bin.extend_from_slice(&feature.to_le_bytes());
                            bin.extend_from_slice(&threshold.to_le_bytes());
                            bin.extend_from_slice(&left.to_le_bytes());
                            bin.extend_from_slice(&right.to_le_bytes());
                        }
                        TreeNode::Leaf { class } => {
                            bin.push(1);
                            bin.extend_from_slice(&class.to_le_bytes());
                        }
                    }
                }
            }
            put_f64s(&mut bin, &f.importance_raw);
        }
        TrainedModel::Mlp(m) => {
            header.push_str("kind = mlp\n");
            header.push_str(&format!("classes = {}\n", m.n_classes()));
            let arch: Vec<String> = m.arch().iter().map(|d| d.to_string()).collect();
            header.push_str(&format!("arch = {}\n", arch.join(",")));
            header.push_str(&format!("seed = {}\n", m.seed));
            let csv = |xs: &[f64]| {
                xs.iter()
                    .map(|v| format!("{v:.17e}"))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            header.push_str(&format!("standardize.mean = {}\n", csv(&m.standardizer.mean)));
            header.push_str(&format!("standardize.std = {}\n", csv(&m.standardizer.std)));
            for l in &m.layers {
                bin.extend_from_slice(&(l.rows as u32).to_le_bytes());
                bin.extend_from_slice(&(l.cols as u32).to_le_bytes());
                put_f64s(&mut bin, &l.w);
                put_f64s(&mut bin, &l.b);
            }
        }
    }
    let mut out = Vec::new();
    out.write_all(header.as_bytes()).unwrap();
    out.write_all(SEP).unwrap();
    out.extend_from_slice(&bin);
    out
}

fn parse_header(text: &str) -> Result<BTreeMap<String, String>, MlError> {
    let mut map = BTreeMap::new();
    for line in text.lines().skip(1) {
        if let Some((k, v)) = line.split_once('=') {
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(map)
}

fn header_usize(h: &BTreeMap<String, String>, key: &str) -> Result<usize, MlError> {
    h.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| MlError::BadModelFile(format!("missing/bad header field `{key}`")))
}

fn header_u64(h: &BTreeMap<String, String>, key: &str) -> Result<u64, MlError> {
    h.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| MlError::BadModelFile(format!("missing/bad header field `{key}`")))
}

fn header_f64_list(h: &BTreeMap<String, String>, key: &str) -> Result<Vec<f64>, MlError> {
    let raw = h
        .get(key)
        .ok_or_else(|| MlError::BadModelFile(format!("missing header field `{key}`")))?;
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| MlError::BadModelFile(format!("bad float in `{key}`")))
        })
        .collect()
}

/// Deserialize a model saved by [`save_model`].
pub fn load_model(bytes: &[u8]) -> Result<(TrainedModel, LabelScheme), MlError> {
    let sep_at = bytes
        .windows(SEP.len())
        .position(|w| w == SEP)
        .ok_or_else(|| MlError::BadModelFile("missing header separator".into()))?;
    let header_text = std::str::from_utf8(&bytes[..sep_at])
        .map_err(|_| MlError::BadModelFile("header is not UTF-8".into()))?;
    if !header_text.starts_with(MAGIC) {
        return Err(MlError::BadModelFile("bad magic".into()));
    }
    let h = parse_header(header_text)?;
    let scheme = h
        .get("scheme")
        .and_then(|t| LabelScheme::from_token(t))
        .ok_or_else(|| MlError::BadModelFile("missing/bad scheme".into()))?;
    let mut cur = Cursor {
        buf: bytes,
        at: sep_at + SEP.len(),
    };
    let kind = h
        .get("kind")
        .ok_or_else(|| MlError::BadModelFile("missing kind".into()))?;
    match kind.as_str() {
        "forest" => {
            let n_classes = header_usize(&h, "classes")?;
            let n_features = header_usize(&h, "features")?;
            let n_trees = cur.u32()? as usize;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes = cur.u32()? as usize;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    match cur.u8()? {
                        0 => nodes.push(TreeNode::Split {
                            feature: cur.u16()?,
                            threshold: cur.f64()?,
                            left: cur.u32()?,
                            right: cur.u32()?,
                        }),
                        1 => nodes.push(TreeNode::Leaf { class: cur.u32()? }),
                        t => {
                            return Err(MlError::BadModelFile(format!("bad node tag {t}")));
                        }
                    }
                }
                trees.push(DecisionTree { nodes });
            }
            let mut importance_raw = vec![0.0; n_features];
            for v in importance_raw.iter_mut() {
                *v = cur.f64()?;
            }
            let config = ForestConfig {
                n_trees,
                max_depth: header_usize(&h, "max_depth")?,
                min_leaf: header_usize(&h, "min_leaf")?,
                n_feature_candidates: header_usize(&h, "split_candidates")?,
                class_weighted: h.get("class_weighted").map(|v| v == "true").unwrap_or(true),
                seed: header_u64(&h, "seed")?,
            };
            let oob_accuracy = h
                .get("oob_accuracy")
                .and_then(|v| v.parse().ok())
                .unwrap_or(0.0);
            Ok((
                TrainedModel::Forest(RandomForest {
                    trees,
                    n_features,
                    n_classes,
                    config,
                    oob_accuracy,
                    importance_raw,
                }),
                scheme,
            ))
        }
        "mlp" => {
            let arch: Vec<usize> = h
                .get("arch")
                .ok_or_else(|| MlError::BadModelFile("missing arch".into()))?
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| MlError::BadModelFile("bad arch".into())))
                .collect::<Result<_, _>>()?;
            let mut layers = Vec::new();
            for _ in arch.windows(2) {
                let rows = cur.u32()? as usize;
                let cols = cur.u32()? as usize;
                let mut w = vec![0.0; rows * cols];
                for v in w.iter_mut() {
                    *v = cur.f64()?;
                }
                let mut b = vec![0.0; rows];
                for v in b.iter_mut() {
                    *v = cur.f64()?;
                }
                layers.push(Layer { rows, cols, w, b });
            }
            let standardizer = Standardizer {
                mean: header_f64_list(&h, "standardize.mean")?,
                std: header_f64_list(&h, "standardize.std")?,
            };
            Ok((
                TrainedModel::Mlp(Mlp {
                    layers,
                    standardizer,
                    seed: header_u64(&h, "seed")?,
                }),
                scheme,
            ))
        }
        other => Err(MlError::BadModelFile(format!("unknown kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{train_forest, train_mlp, Dataset, MlpConfig, Sample};
    use crate::seqgraph::N_FEATURES;

    #[test]
    fn forest_roundtrip_preserves_predictions() {
        let samples: Vec<Sample> = (0..60)
            .map(|i| {
                let mut f = [0.0; N_FEATURES];
                f[0] = (i % 9) as f64;
                f[5] = (i % 4) as f64;
                Sample {
                    circuit: "t".into(),
                    latch_id: i,
                    features: f,
                    label: (i % 2),
                }
            })
            .collect();
        let ds = Dataset::new(samples, 2).unwrap();
        let rf = train_forest(&ds, &Default::default()).unwrap();
        let bytes = save_model(&TrainedModel::Forest(rf.clone()), LabelScheme::LdVsRest);
        let (loaded, scheme) = load_model(&bytes).unwrap();
        assert_eq!(scheme, LabelScheme::LdVsRest);
        for s in &ds.samples {
            assert_eq!(
                loaded.predict_proba(&s.features).unwrap(),
                rf.predict_proba(&s.features).unwrap()
            );
        }
    }

    #[test]
    fn mlp_roundtrip_is_bit_exact() {
        let rows: Vec<(Vec<f64>, u32)> = (0..100)
            .map(|i| (vec![(i % 13) as f64, (i % 5) as f64], (i % 3) as u32))
            .collect();
        let mlp = train_mlp(&rows, &rows, 3, &MlpConfig {
            hidden: vec![6],
            epochs: 3,
            ..Default::default()
        })
        .unwrap();
        let bytes = save_model(&TrainedModel::Mlp(mlp.clone()), LabelScheme::Psd);
        let (loaded, _) = load_model(&bytes).unwrap();
        let TrainedModel::Mlp(l) = loaded else {
            panic!("wrong kind")
        };
        assert_eq!(l.params_flat(), mlp.params_flat());
        assert_eq!(l.standardizer, mlp.standardizer);
    }
}
