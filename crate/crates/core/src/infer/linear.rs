//! Multinomial logistic regression on flattened features.
//!
//! This is the native backend that keeps the whole cascade trainable and
//! testable without a deep-learning stack; CNN backends plug in through the
//! external adapter instead.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::binio;
use crate::error::{Error, Result};
use crate::infer::{softmax, ClassScores, Classifier, InputShape};
use crate::mat::Mat;
use crate::real::Real;

const MODEL_MAGIC: &[u8; 6] = b"AFMDL1";

/// Training hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Learning rate is multiplied by this factor every `lr_decay_every` epochs.
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 25,
            learning_rate: 0.001,
            lr_decay_factor: 0.1,
            lr_decay_every: 20,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Linear classifier: `softmax(W x + b)` over flattened inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    /// `(n_classes, n_features)`.
    pub weights: Mat<T>,
    pub bias: Vec<T>,
    pub class_order: Vec<String>,
    pub n_features: usize,
}

impl<T: Real> LinearModel<T> {
    /// Zero-initialized model.
    pub fn zeros(class_order: Vec<String>, n_features: usize) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &class_order {
            if !seen.insert(c.clone()) {
                return Err(Error::UnknownLabel(format!("duplicate class {c}")));
            }
        }
        if class_order.len() < 2 {
            return Err(Error::TrainingData("need at least 2 classes".into()));
        }
        Ok(LinearModel {
            weights: Mat::zeros(class_order.len(), n_features),
            bias: vec![T::zero(); class_order.len()],
            class_order,
            n_features,
        })
    }

    fn logits(&self, x: &[T]) -> Vec<T> {
        self.class_order
            .iter()
            .enumerate()
            .map(|(k, _)| {
                self.weights
                    .row(k)
                    .iter()
                    .zip(x)
                    .map(|(&w, &v)| w * v)
                    .sum::<T>()
                    + self.bias[k]
            })
            .collect()
    }

    /// Mean weighted cross-entropy over a dataset.
    ///
    /// Exposed so gradient checks can finite-difference the same objective
    /// the trainer descends.
    pub fn loss(&self, data: &[(Mat<T>, String)], weights: Option<&[f64]>) -> f64 {
        let mut total = 0.0f64;
        let mut wsum = 0.0f64;
        for (i, (x, y)) in data.iter().enumerate() {
            let w = weights.map_or(1.0, |ws| ws[i]);
            let probs = softmax(&self.logits(x.as_slice()));
            let yi = self
                .class_order
                .iter()
                .position(|c| c == y)
                .expect("label in class order");
            total += w * -(probs[yi].to_f64_c().max(1e-300)).ln();
            wsum += w;
        }
        total / wsum
    }

    /// Analytic gradient of [`Self::loss`] at the current parameters.
    pub fn gradient(
        &self,
        data: &[(Mat<T>, String)],
        weights: Option<&[f64]>,
    ) -> (Mat<T>, Vec<T>) {
        let n_classes = self.class_order.len();
        let mut gw = Mat::zeros(n_classes, self.n_features);
        let mut gb = vec![T::zero(); n_classes];
        let mut wsum = 0.0f64;
        for (i, (x, y)) in data.iter().enumerate() {
            let w = T::from_f64_c(weights.map_or(1.0, |ws| ws[i]));
            wsum += weights.map_or(1.0, |ws| ws[i]);
            let probs = softmax(&self.logits(x.as_slice()));
            let yi = self
                .class_order
                .iter()
                .position(|c| c == y)
                .expect("label in class order");
            for k in 0..n_classes {
                let delta = if k == yi { probs[k] - T::one() } else { probs[k] };
                let coeff = w * delta;
                gb[k] += coeff;
                let grow = gw.row_mut(k);
                for (g, &v) in grow.iter_mut().zip(x.as_slice()) {
                    *g += coeff * v;
                }
            }
        }
        let inv = T::from_f64_c(1.0 / wsum);
        (gw.map(|g| g * inv), gb.into_iter().map(|g| g * inv).collect())
    }

    /// Write in `AFMDL1` format: magic, u32-LE class count, u32-LE feature
    /// count, length-prefixed UTF-8 class names, float64-LE weights
    /// row-major, then float64-LE biases.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        binio::write_magic(&mut w, MODEL_MAGIC)?;
        binio::write_u32(&mut w, self.class_order.len() as u32)?;
        binio::write_u32(&mut w, self.n_features as u32)?;
        for name in &self.class_order {
            binio::write_u16(&mut w, name.len() as u16)?;
            w.write_all(name.as_bytes())?;
        }
        for &v in self.weights.as_slice() {
            binio::write_f64(&mut w, v.to_f64_c())?;
        }
        for &v in &self.bias {
            binio::write_f64(&mut w, v.to_f64_c())?;
        }
        Ok(())
    }

    /// Read an `AFMDL1` file; truncated or corrupt files never yield a model.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        binio::expect_magic(&mut r, MODEL_MAGIC, path)?;
        let n_classes = binio::read_u32(&mut r, path)? as usize;
        let n_features = binio::read_u32(&mut r, path)? as usize;
        if n_classes < 2 {
            return Err(Error::format(path, format!("model with {n_classes} classes")));
        }
        let mut class_order = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let len = binio::read_u16(&mut r, path)? as usize;
            let mut bytes = vec![0u8; len];
            r.read_exact(&mut bytes)
                .map_err(|_| Error::format(path, "truncated class name"))?;
            class_order.push(
                String::from_utf8(bytes).map_err(|_| Error::format(path, "class name not UTF-8"))?,
            );
        }
        let mut weights = Vec::with_capacity(n_classes * n_features);
        for _ in 0..n_classes * n_features {
            weights.push(T::from_f64_c(binio::read_f64(&mut r, path)?));
        }
        let mut bias = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            bias.push(T::from_f64_c(binio::read_f64(&mut r, path)?));
        }
        binio::expect_eof(&mut r, path)?;
        Ok(LinearModel {
            weights: Mat::from_vec(n_classes, n_features, weights)?,
            bias,
            class_order,
            n_features,
        })
    }
}

impl<T: Real> Classifier<T> for LinearModel<T> {
    fn class_labels(&self) -> &[String] {
        &self.class_order
    }

    fn input_shape(&self) -> InputShape {
        InputShape::Flat(self.n_features)
    }

    fn predict_scores(&self, input: &Mat<T>) -> Result<ClassScores<T>> {
        self.input_shape().check(input)?;
        let probs = softmax(&self.logits(input.as_slice()));
        ClassScores::new(self.class_order.clone(), probs)
    }
}

/// Fit a multinomial logistic regression with weighted mini-batch gradient
/// descent and step learning-rate decay.
///
/// Deterministic given the seed, and invariant to the order the samples are
/// passed in: samples are first brought into a canonical order, then batch
/// shuffling is driven entirely by the seed. The returned parameters are the
/// epoch snapshot with the lowest full-data loss (the initial parameters
/// count as a snapshot), so the final training loss never exceeds the
/// initial one.
pub fn train_linear<T: Real>(
    data: &[(Mat<T>, String)],
    cfg: &TrainConfig,
    sample_weights: Option<&[f64]>,
) -> Result<LinearModel<T>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::TrainingData("no training samples".into()));
    }
    if let Some(ws) = sample_weights {
        if ws.len() != data.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sample weights", data.len()),
                actual: format!("{}", ws.len()),
            });
        }
        if ws.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::NonFinite("sample weight".into()));
        }
    }
    let n_features = data[0].0.len();
    for (x, _) in data {
        if x.len() != n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_features} features"),
                actual: format!("{} features", x.len()),
            });
        }
        if !x.all_finite() {
            return Err(Error::NonFinite("training feature".into()));
        }
    }

    let mut class_order: Vec<String> = data.iter().map(|(_, y)| y.clone()).collect();
    class_order.sort();
    class_order.dedup();
    if class_order.len() < 2 {
        return Err(Error::TrainingData(format!(
            "need at least 2 classes, got {:?}",
            class_order
        )));
    }

    // Canonical sample order: by label, then features, then weight.
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| {
        let (xa, ya) = &data[a];
        let (xb, yb) = &data[b];
        ya.cmp(yb)
            .then_with(|| {
                for (&va, &vb) in xa.as_slice().iter().zip(xb.as_slice()) {
                    match va.partial_cmp(&vb) {
                        Some(std::cmp::Ordering::Equal) | None => continue,
                        Some(o) => return o,
                    }
                }
                std::cmp::Ordering::Equal
            })
            .then_with(|| {
                let wa = sample_weights.map_or(1.0, |w| w[a]);
                let wb = sample_weights.map_or(1.0, |w| w[b]);
                wa.partial_cmp(&wb).unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    let samples: Vec<(Mat<T>, String)> = order.iter().map(|&i| data[i].clone()).collect();
    let weights: Option<Vec<f64>> =
        sample_weights.map(|ws| order.iter().map(|&i| ws[i]).collect());
    let weights = weights.as_deref();

    let mut model = LinearModel::zeros(class_order, n_features)?;
    let mut best_loss = model.loss(&samples, weights);
    let mut best = model.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    let mut batch: Vec<(Mat<T>, String)> = Vec::with_capacity(cfg.batch_size);
    let mut batch_w: Vec<f64> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        let lr = T::from_f64_c(
            cfg.learning_rate * cfg.lr_decay_factor.powi((epoch / cfg.lr_decay_every) as i32),
        );
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(cfg.batch_size) {
            batch.clear();
            batch_w.clear();
            for &i in chunk {
                batch.push(samples[i].clone());
                batch_w.push(weights.map_or(1.0, |ws| ws[i]));
            }
            let (gw, gb) = model.gradient(&batch, Some(&batch_w));
            for (w, &g) in model.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                *w -= lr * g;
            }
            for (b, &g) in model.bias.iter_mut().zip(&gb) {
                *b -= lr * g;
            }
        }
        let loss = model.loss(&samples, weights);
        if loss < best_loss {
            best_loss = loss;
            best = model.clone();
        }
    }
    Ok(best)
}
