//! Fully connected network with rectifier hidden layers and a softmax
//! output, trained by mini-batch gradient descent on (class-weighted)
//! cross-entropy. Deterministic for a fixed seed; single-threaded training
//! with a fixed reduction order.

use super::MlError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub epochs: usize,
    /// Stop after this many epochs without validation improvement.
    pub patience: usize,
    pub class_weighted: bool,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64, 32],
            batch_size: 128,
            learning_rate: 3e-3,
            lr_decay: 0.98,
            epochs: 200,
            patience: 25,
            class_weighted: true,
            seed: 0,
        }
    }
}

/// One dense layer: `rows x cols` weights (row-major) plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let mut acc = self.b[r];
            let row = &self.w[r * self.cols..(r + 1) * self.cols];
            for (wc, xc) in row.iter().zip(x) {
                acc += wc * xc;
            }
            out.push(acc);
        }
    }
}

/// Per-feature affine transform fit on the training set and stored with
/// the model; applied identically at inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Standardizer {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(*r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(*r) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < 1e-12 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub standardizer: Standardizer,
    pub seed: u64,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

impl Mlp {
    pub fn n_inputs(&self) -> usize {
        self.layers.first().map_or(0, |l| l.cols)
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.rows)
    }

    pub fn arch(&self) -> Vec<usize> {
        let mut a = vec![self.n_inputs()];
        a.extend(self.layers.iter().map(|l| l.rows));
        a
    }

    /// Raw forward pass on already-standardized input.
    fn forward_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if i + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        softmax(&cur)
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, MlError> {
        if features.len() != self.n_inputs() {
            return Err(MlError::DimensionMismatch {
                model: self.n_inputs(),
                input: features.len(),
            });
        }
        Ok(self.forward_raw(&self.standardizer.apply(features)))
    }

    /// Mean weighted cross-entropy on a batch of standardized rows.
    pub fn loss_on_batch(&self, xs: &[Vec<f64>], ys: &[u32], class_w: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut wsum = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let p = self.forward_raw(x);
            let w = class_w[y as usize];
            total += -w * p[y as usize].max(1e-300).ln();
            wsum += w;
        }
        total / wsum.max(1e-12)
    }

    /// Analytic gradient of [`Self::loss_on_batch`] w.r.t. every parameter,
    /// flattened in layer order (weights row-major, then biases).
    pub fn grads_on_batch(&self, xs: &[Vec<f64>], ys: &[u32], class_w: &[f64]) -> Vec<f64> {
        let mut gw: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect();
        let wsum: f64 = ys.iter().map(|&y| class_w[y as usize]).sum();
        let wsum = wsum.max(1e-12);

        for (x, &y) in xs.iter().zip(ys) {
            // Forward, keeping pre/post activations.
            let mut acts: Vec<Vec<f64>> = vec![x.clone()];
            let mut pre: Vec<Vec<f64>> = Vec::new();
            for (i, layer) in self.layers.iter().enumerate() {
                let mut z = Vec::new();
                layer.forward(acts.last().unwrap(), &mut z);
                pre.push(z.clone());
                if i + 1 < self.layers.len() {
                    for v in z.iter_mut() {
                        *v = v.max(0.0);
                    }
                }
                acts.push(z);
            }
            let probs = softmax(pre.last().unwrap());
            let w = class_w[y as usize];

            // dL/dlogit = w * (p - onehot) / wsum
            let mut delta: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(c, &p)| w * (p - if c as u32 == y { 1.0 } else { 0.0 }) / wsum)
                .collect();

            for li in (0..self.layers.len()).rev() {
                let input = &acts[li];
                let layer = &self.layers[li];
                for r in 0..layer.rows {
                    gb[li][r] += delta[r];
                    let row = &mut gw[li][r * layer.cols..(r + 1) * layer.cols];
                    for (g, xv) in row.iter_mut().zip(input) {
                        *g += delta[r] * xv;
                    }
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.cols];
                    for (r, &d) in delta.iter().enumerate() {
                        let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                        for (p, wv) in prev.iter_mut().zip(row) {
                            *p += d * wv;
                        }
                    }
                    // Rectifier derivative on the previous pre-activation.
                    for (p, z) in prev.iter_mut().zip(&pre[li - 1]) {
                        if *z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }

        let mut flat = Vec::new();
        for (w, b) in gw.into_iter().zip(gb) {
            flat.extend(w);
            flat.extend(b);
        }
        flat
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for l in &self.layers {
            flat.extend(l.w.iter());
            flat.extend(l.b.iter());
        }
        flat
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            let wn = l.w.len();
            l.w.copy_from_slice(&flat[at..at + wn]);
            at += wn;
            let bn = l.b.len();
            l.b.copy_from_slice(&flat[at..at + bn]);
            at += bn;
        }
        assert_eq!(at, flat.len());
    }

    /// Fresh network with uniform Xavier-style init; standardizer is
    /// identity until training replaces it.
    pub fn init(arch: &[usize], seed: u64) -> Mlp {
        assert!(arch.len() >= 2);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let layers = arch
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let limit = (6.0 / (rows + cols) as f64).sqrt();
                Layer {
                    rows,
                    cols,
                    w: (0..rows * cols)
                        .map(|_| rng.gen_range(-limit..limit))
                        .collect(),
                    b: vec![0.0; rows],
                }
            })
            .collect();
        Mlp {
            layers,
            standardizer: Standardizer {
                mean: vec![0.0; arch[0]],
                std: vec![1.0; arch[0]],
            },
            seed,
        }
    }
}

/// Train on (features, label) rows; `val` drives early stopping (pass the
/// training rows again when no held-out split is available).
pub fn train_mlp(
    train: &[(Vec<f64>, u32)],
    val: &[(Vec<f64>, u32)],
    n_classes: usize,
    config: &MlpConfig,
) -> Result<Mlp, MlError> {
    if train.is_empty() {
        return Err(MlError::Empty);
    }
    let n_features = train[0].0.len();
    let raw_rows: Vec<&[f64]> = train.iter().map(|(x, _)| x.as_slice()).collect();
    let standardizer = Standardizer::fit(&raw_rows);

    let xs: Vec<Vec<f64>> = train.iter().map(|(x, _)| standardizer.apply(x)).collect();
    let ys: Vec<u32> = train.iter().map(|(_, y)| *y).collect();
    let vxs: Vec<Vec<f64>> = val.iter().map(|(x, _)| standardizer.apply(x)).collect();
    let vys: Vec<u32> = val.iter().map(|(_, y)| *y).collect();

    let mut class_w = vec![1.0; n_classes];
    if config.class_weighted {
        let mut counts = vec![0usize; n_classes];
        for &y in &ys {
            counts[y as usize] += 1;
        }
        let present = counts.iter().filter(|&&c| c > 0).count().max(1);
        for (w, &c) in class_w.iter_mut().zip(&counts) {
            *w = if c == 0 {
                0.0
            } else {
                ys.len() as f64 / (present as f64 * c as f64)
            };
        }
    }

    let mut arch = vec![n_features];
    arch.extend(&config.hidden);
    arch.push(n_classes);
    let mut mlp = Mlp::init(&arch, config.seed);
    mlp.standardizer = standardizer;

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0xA5A5_5A5A_DEAD_BEEF);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut lr = config.learning_rate;
    let mut best = mlp.clone();
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;

    for epoch in 0..config.epochs {
        // Fisher-Yates shuffle.
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        for chunk in order.chunks(config.batch_size.max(1)) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let by: Vec<u32> = chunk.iter().map(|&i| ys[i]).collect();
            let grads = mlp.grads_on_batch(&bx, &by, &class_w);
            let mut params = mlp.params_flat();
            for (p, g) in params.iter_mut().zip(&grads) {
                *p -= lr * g;
            }
            mlp.set_params_flat(&params);
        }
        lr *= config.lr_decay;

        let val_loss = if vxs.is_empty() {
            mlp.loss_on_batch(&xs, &ys, &class_w)
        } else {
            mlp.loss_on_batch(&vxs, &vys, &class_w)
        };
        if !val_loss.is_finite() {
            return Err(MlError::Diverged {
                epoch,
                loss: val_loss,
            });
        }
        if val_loss < best_val - 1e-9 {
            best_val = val_loss;
            best = mlp.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(best)
}

/// Permutation importance of each feature on labeled validation rows,
/// normalized to sum 1 (uniform when nothing helps).
pub fn permutation_importance(
    mlp: &Mlp,
    rows: &[(Vec<f64>, u32)],
    seed: u64,
) -> Vec<f64> {
    let d = mlp.n_inputs();
    let base = accuracy(mlp, rows);
    let mut drops = vec![0.0; d];
    for f in 0..d {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ (f as u64 + 1).wrapping_mul(0x517C_C1B7_2722_0A95));
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let shuffled: Vec<(Vec<f64>, u32)> = rows
            .iter()
            .enumerate()
            .map(|(i, (x, y))| {
                let mut x = x.clone();
                x[f] = rows[perm[i]].0[f];
                (x, *y)
            })
            .collect();
        drops[f] = (base - accuracy(mlp, &shuffled)).max(0.0);
    }
    let total: f64 = drops.iter().sum();
    if total <= 0.0 {
        vec![1.0 / d as f64; d]
    } else {
        drops.into_iter().map(|v| v / total).collect()
    }
}

pub fn accuracy(mlp: &Mlp, rows: &[(Vec<f64>, u32)]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let hits = rows
        .iter()
        .filter(|(x, y)| {
            let p = mlp.predict_proba(x).unwrap();
            super::argmax(&p) as u32 == *y
        })
        .count();
    hits as f64 / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let p = softmax(&[0.0, 0.0, 0.0]);
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_network_predicts_uniform() {
        let mut mlp = Mlp::init(&[4, 8, 3], 0);
        let zeros = vec![0.0; mlp.params_flat().len()];
        mlp.set_params_flat(&zeros);
        let p = mlp.predict_proba(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn xor_trains_to_perfect_accuracy() {
        let rows: Vec<(Vec<f64>, u32)> = vec![
            (vec![0.0, 0.0], 0),
            (vec![0.0, 1.0], 1),
            (vec![1.0, 0.0], 1),
            (vec![1.0, 1.0], 0),
        ];
        // Replicate so batches are meaningful.
        let train: Vec<(Vec<f64>, u32)> = (0..64).flat_map(|_| rows.clone()).collect();
        let mlp = train_mlp(
            &train,
            &rows,
            2,
            &MlpConfig {
                hidden: vec![8],
                batch_size: 16,
                learning_rate: 0.1,
                lr_decay: 0.995,
                epochs: 400,
                patience: 400,
                class_weighted: false,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(accuracy(&mlp, &rows), 1.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        // Central differences over >= 20 random configurations.
        let mut worst = 0.0f64;
        for seed in 0..20u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let d = rng.gen_range(2..6);
            let h = rng.gen_range(3..9);
            let k = rng.gen_range(2..5);
            let mlp = Mlp::init(&[d, h, k], seed ^ 0xFEED);
            let n = rng.gen_range(2..6);
            let xs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let ys: Vec<u32> = (0..n).map(|_| rng.gen_range(0..k) as u32).collect();
            let class_w = vec![1.0; k];

            let analytic = mlp.grads_on_batch(&xs, &ys, &class_w);
            let mut m = mlp.clone();
            let params = m.params_flat();
            let eps = 1e-5;
            for (pi, &p0) in params.iter().enumerate() {
                let mut plus = params.clone();
                plus[pi] = p0 + eps;
                m.set_params_flat(&plus);
                let lp = m.loss_on_batch(&xs, &ys, &class_w);
                let mut minus = params.clone();
                minus[pi] = p0 - eps;
                m.set_params_flat(&minus);
                let lm = m.loss_on_batch(&xs, &ys, &class_w);
                let numeric = (lp - lm) / (2.0 * eps);
                let denom = analytic[pi].abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((analytic[pi] - numeric).abs() / denom);
            }
        }
        assert!(worst < 1e-4, "max relative gradient error {worst}");
    }

    #[test]
    fn training_is_deterministic() {
        let rows: Vec<(Vec<f64>, u32)> = (0..200)
            .map(|i| {
                let x = (i % 17) as f64 / 17.0;
                (vec![x, 1.0 - x], (i % 2) as u32)
            })
            .collect();
        let cfg = MlpConfig {
            hidden: vec![8],
            epochs: 5,
            seed: 9,
            ..Default::default()
        };
        let a = train_mlp(&rows, &rows, 2, &cfg).unwrap();
        let b = train_mlp(&rows, &rows, 2, &cfg).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
    }

    #[test]
    fn permutation_importance_concentrates_on_deciding_feature() {
        let rows: Vec<(Vec<f64>, u32)> = (0..200)
            .map(|i| {
                let x = if i % 2 == 0 { 0.0 } else { 1.0 };
                (vec![x, 0.5, 0.25], (i % 2) as u32)
            })
            .collect();
        let mlp = train_mlp(&rows, &rows, 2, &MlpConfig {
            hidden: vec![8],
            epochs: 60,
            learning_rate: 0.05,
            class_weighted: false,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(accuracy(&mlp, &rows), 1.0);
        let imp = permutation_importance(&mlp, &rows, 11);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(imp[0] > 0.95, "importance: {imp:?}");
    }

    #[test]
    fn standardizer_is_stored_not_recomputed() {
        let rows: Vec<(Vec<f64>, u32)> = (0..100)
            .map(|i| (vec![i as f64, 100.0 - i as f64], (i % 2) as u32))
            .collect();
        let mlp = train_mlp(&rows, &rows, 2, &MlpConfig {
            hidden: vec![4],
            epochs: 2,
            ..Default::default()
        })
        .unwrap();
        let m = &mlp.standardizer.mean;
        assert!((m[0] - 49.5).abs() < 1e-9);
        // Applying the stored transform twice differs — proof it is affine
        // state, not recomputed per call.
        let once = mlp.standardizer.apply(&[49.5, 50.5]);
        assert!((once[0]).abs() < 1e-9);
    }
}
