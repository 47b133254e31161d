//! Random forest with axis-aligned entropy splits, bootstrap sampling and
//! per-node feature subsampling. Probabilities are tree-vote fractions.

use super::{Dataset, MlError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; 0 means floor(sqrt(n_features)).
    pub n_feature_candidates: usize,
    /// Bootstrap with inverse-frequency class weights instead of uniformly.
    pub class_weighted: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        // Plain bootstrap by default: weighted sampling trades too much
        // delay-decoy precision for logic-decoy recall at this data scale.
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            n_feature_candidates: 0,
            class_weighted: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum TreeNode {
    Split {
        feature: u16,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        class: u32,
    },
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, features: &[f64]) -> u32 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { class } => return class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub n_classes: usize,
    pub config: ForestConfig,
    /// Out-of-bag accuracy measured during training.
    pub oob_accuracy: f64,
    /// Total weighted impurity decrease per feature (unnormalized).
    pub importance_raw: Vec<f64>,
}

impl RandomForest {
    /// Vote fractions over classes.
    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, MlError> {
        if features.len() != self.n_features {
            return Err(MlError::DimensionMismatch {
                model: self.n_features,
                input: features.len(),
            });
        }
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(features) as usize] += 1;
        }
        Ok(votes
            .iter()
            .map(|&v| v as f64 / self.trees.len() as f64)
            .collect())
    }

    pub fn predict(&self, features: &[f64]) -> Result<u32, MlError> {
        Ok(super::argmax(&self.predict_proba(features)?) as u32)
    }

    /// Mean-impurity-decrease importance, normalized to sum 1.
    pub fn feature_importance(&self) -> Vec<f64> {
        let total: f64 = self.importance_raw.iter().sum();
        if total <= 0.0 {
            return vec![1.0 / self.n_features as f64; self.n_features];
        }
        self.importance_raw.iter().map(|&v| v / total).collect()
    }
}

fn entropy(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &c in counts {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Best (feature, threshold, conditional entropy) among the candidate
/// features, or None when no candidate separates the samples. Ties resolve
/// by (entropy, feature, threshold) so training is deterministic.
pub fn best_split(
    xs: &[[f64; crate::seqgraph::N_FEATURES]],
    ys: &[u32],
    weights: &[f64],
    idx: &[u32],
    features: &[usize],
    n_classes: usize,
) -> Option<(usize, f64, f64)> {
    let mut best: Option<(f64, usize, f64)> = None;
    let total_w: f64 = idx.iter().map(|&i| weights[i as usize]).sum();
    for &f in features {
        let mut vals: Vec<(f64, u32, f64)> = idx
            .iter()
            .map(|&i| (xs[i as usize][f], ys[i as usize], weights[i as usize]))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut left = vec![0.0; n_classes];
        let mut right = vec![0.0; n_classes];
        let mut right_w = 0.0;
        for &(_, y, w) in &vals {
            right[y as usize] += w;
            right_w += w;
        }
        let mut left_w = 0.0;
        for k in 0..vals.len().saturating_sub(1) {
            let (v, y, w) = vals[k];
            left[y as usize] += w;
            left_w += w;
            right[y as usize] -= w;
            right_w -= w;
            let v_next = vals[k + 1].0;
            if v_next <= v {
                continue;
            }
            let threshold = v + (v_next - v) / 2.0;
            let h = (left_w * entropy(&left, left_w) + right_w * entropy(&right, right_w))
                / total_w;
            let cand = (h, f, threshold);
            let better = match best {
                None => true,
                Some(b) => cand.0.total_cmp(&b.0).then(cand.1.cmp(&b.1)).then(cand.2.total_cmp(&b.2))
                    == std::cmp::Ordering::Less,
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best.map(|(h, f, t)| (f, t, h))
}

struct TreeBuilder<'a> {
    xs: &'a [[f64; crate::seqgraph::N_FEATURES]],
    ys: &'a [u32],
    weights: &'a [f64],
    n_classes: usize,
    cfg: ForestConfig,
    n_candidates: usize,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
    total_weight: f64,
}

impl<'a> TreeBuilder<'a> {
    fn leaf(&mut self, idx: &[u32]) -> u32 {
        let mut counts = vec![0.0; self.n_classes];
        for &i in idx {
            counts[self.ys[i as usize] as usize] += self.weights[i as usize];
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        self.nodes.push(TreeNode::Leaf { class: best as u32 });
        (self.nodes.len() - 1) as u32
    }

    fn build(&mut self, idx: &[u32], depth: usize, rng: &mut ChaCha20Rng) -> u32 {
        let first = self.ys[idx[0] as usize];
        let pure = idx.iter().all(|&i| self.ys[i as usize] == first);
        if pure || depth >= self.cfg.max_depth || idx.len() < 2 * self.cfg.min_leaf {
            return self.leaf(idx);
        }
        // Feature subsample without replacement: a random permutation whose
        // first n_candidates entries are tried first; when none of them
        // separates the node, the search keeps drawing features until one
        // does or all are exhausted.
        let nf = crate::seqgraph::N_FEATURES;
        let mut pool: Vec<usize> = (0..nf).collect();
        for i in (1..nf).rev() {
            pool.swap(i, rng.gen_range(0..=i));
        }
        let mut split = None;
        let mut tried = 0;
        while tried < nf {
            let take = if tried == 0 {
                self.n_candidates.min(nf)
            } else {
                1
            };
            let feats: Vec<usize> = pool[tried..tried + take].to_vec();
            tried += take;
            if let Some(best) = best_split(
                self.xs,
                self.ys,
                self.weights,
                idx,
                &feats,
                self.n_classes,
            ) {
                split = Some(best);
                break;
            }
        }
        let Some((f, t, h_split)) = split else {
            return self.leaf(idx);
        };

        let (li, ri): (Vec<u32>, Vec<u32>) =
            idx.iter().partition(|&&i| self.xs[i as usize][f] <= t);
        if li.len() < self.cfg.min_leaf || ri.len() < self.cfg.min_leaf {
            return self.leaf(idx);
        }

        // Importance: node-weight-scaled entropy decrease.
        let mut counts = vec![0.0; self.n_classes];
        let mut w = 0.0;
        for &i in idx.iter() {
            counts[self.ys[i as usize] as usize] += self.weights[i as usize];
            w += self.weights[i as usize];
        }
        let h_node = entropy(&counts, w);
        let gain = (h_node - h_split).max(0.0) * (w / self.total_weight);
        self.importance[f] += gain;

        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { class: 0 }); // placeholder
        let left = self.build(&li, depth + 1, rng);
        let right = self.build(&ri, depth + 1, rng);
        self.nodes[at] = TreeNode::Split {
            feature: f as u16,
            threshold: t,
            left,
            right,
        };
        at as u32
    }
}

/// Train a random forest. Deterministic for a given seed; trees train in
/// parallel with per-tree derived seeds. Class imbalance is handled by
/// inverse-frequency weighted bootstrap sampling.
pub fn train_forest(dataset: &Dataset, config: &ForestConfig) -> Result<RandomForest, MlError> {
    if dataset.is_empty() {
        return Err(MlError::Empty);
    }
    let counts = dataset.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(MlError::SingleClass);
    }
    let n = dataset.len();
    let xs: Vec<[f64; crate::seqgraph::N_FEATURES]> =
        dataset.samples.iter().map(|s| s.features).collect();
    let ys: Vec<u32> = dataset.samples.iter().map(|s| s.label).collect();
    let class_w = if config.class_weighted {
        dataset.class_weights()
    } else {
        vec![1.0; dataset.n_classes]
    };
    let sample_w: Vec<f64> = ys.iter().map(|&y| class_w[y as usize]).collect();
    let cum: Vec<f64> = sample_w
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let w_total = *cum.last().unwrap();

    let n_candidates = if config.n_feature_candidates == 0 {
        (crate::seqgraph::N_FEATURES as f64).sqrt().floor() as usize
    } else {
        config.n_feature_candidates
    };

    let results: Vec<(DecisionTree, Vec<bool>, Vec<f64>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|ti| {
            let mut rng = ChaCha20Rng::seed_from_u64(
                config.seed ^ (ti as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            // Weighted bootstrap with replacement.
            let mut in_bag = vec![false; n];
            let mut idx = Vec::with_capacity(n);
            for _ in 0..n {
                let r = rng.gen::<f64>() * w_total;
                let i = cum.partition_point(|&c| c <= r).min(n - 1);
                idx.push(i as u32);
                in_bag[i] = true;
            }
            // Within-tree training is unweighted; the bootstrap already
            // rebalanced classes.
            let uniform = vec![1.0; n];
            let mut builder = TreeBuilder {
                xs: &xs,
                ys: &ys,
                weights: &uniform,
                n_classes: dataset.n_classes,
                cfg: *config,
                n_candidates,
                nodes: Vec::new(),
                importance: vec![0.0; crate::seqgraph::N_FEATURES],
                total_weight: idx.len() as f64,
            };
            builder.build(&idx, 0, &mut rng);
            (
                DecisionTree {
                    nodes: builder.nodes,
                },
                in_bag,
                builder.importance,
            )
        })
        .collect();

    let mut trees = Vec::with_capacity(config.n_trees);
    let mut importance_raw = vec![0.0; crate::seqgraph::N_FEATURES];
    let mut oob_votes = vec![vec![0usize; dataset.n_classes]; n];
    for (tree, in_bag, imp) in results {
        for i in 0..n {
            if !in_bag[i] {
                oob_votes[i][tree.predict(&xs[i]) as usize] += 1;
            }
        }
        for (a, b) in importance_raw.iter_mut().zip(&imp) {
            *a += b / config.n_trees as f64;
        }
        trees.push(tree);
    }
    let mut oob_hits = 0usize;
    let mut oob_total = 0usize;
    for i in 0..n {
        let total: usize = oob_votes[i].iter().sum();
        if total > 0 {
            oob_total += 1;
            if super::argmax(&oob_votes[i].iter().map(|&v| v as f64).collect::<Vec<_>>())
                == ys[i] as usize
            {
                oob_hits += 1;
            }
        }
    }
    let oob_accuracy = if oob_total == 0 {
        0.0
    } else {
        oob_hits as f64 / oob_total as f64
    };

    Ok(RandomForest {
        trees,
        n_features: crate::seqgraph::N_FEATURES,
        n_classes: dataset.n_classes,
        config: *config,
        oob_accuracy,
        importance_raw,
    })
}
