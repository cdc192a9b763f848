//! Classifier abstraction: a native trainable linear backend for end-to-end
//! verification, an adapter for external model runtimes, and the class
//! imbalance utilities used during training.

mod adapter;
mod balance;
mod linear;

pub use adapter::{external_model_adapter, ExternalModelAdapter, ExternalRuntime};
pub use balance::{downsample, weighted_sampler, WeightedSampler};
pub use linear::{train_linear, LinearModel, TrainConfig};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Normalized per-class probabilities for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores<T> {
    labels: Vec<String>,
    probs: Vec<T>,
}

impl<T: Real> ClassScores<T> {
    /// Pair labels with probabilities; enforces the sum-to-one invariant.
    pub fn new(labels: Vec<String>, probs: Vec<T>) -> Result<Self> {
        if labels.len() != probs.len() || labels.is_empty() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} probabilities", labels.len()),
                actual: format!("{}", probs.len()),
            });
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("class probability".into()));
        }
        let sum = probs.iter().copied().sum::<T>().to_f64_c();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::NonFinite(format!("class probabilities sum to {sum}, not 1")));
        }
        Ok(ClassScores { labels, probs })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Probability for a label, if the class exists.
    pub fn prob(&self, label: &str) -> Option<T> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.probs[i])
    }

    /// Highest-probability label; first in class order wins ties.
    pub fn argmax(&self) -> &str {
        let mut best = 0usize;
        for i in 1..self.probs.len() {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        &self.labels[best]
    }
}

/// Declared input contract of a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputShape {
    /// Any matrix with exactly this many elements (flattened row-major).
    Flat(usize),
    /// Exactly `(rows, cols)`.
    Exact(usize, usize),
}

impl InputShape {
    pub fn check<T: Real>(&self, input: &Mat<T>) -> Result<()> {
        let ok = match *self {
            InputShape::Flat(n) => input.len() == n,
            InputShape::Exact(r, c) => input.shape() == (r, c),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: match *self {
                    InputShape::Flat(n) => format!("{n} features"),
                    InputShape::Exact(r, c) => format!("{r}x{c} input"),
                },
                actual: format!("{}x{} input", input.rows(), input.cols()),
            })
        }
    }
}

/// Anything that turns a feature matrix into class probabilities.
pub trait Classifier<T: Real>: Send + Sync {
    /// Classes in a fixed order.
    fn class_labels(&self) -> &[String];

    /// Declared input contract.
    fn input_shape(&self) -> InputShape;

    /// Normalized scores over the class set; deterministic.
    fn predict_scores(&self, input: &Mat<T>) -> Result<ClassScores<T>>;
}

/// Numerically stable softmax.
pub(crate) fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_sums_to_one_and_positive() {
        let s = softmax(&[1.0f64, -3.0, 0.5, 100.0]);
        let sum: f64 = s.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn softmax_shift_invariant_argmax() {
        let a = softmax(&[0.3f64, 1.2, -0.5]);
        let b = softmax(&[100.3f64, 101.2, 99.5]);
        for (&x, &y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn scores_invariants_enforced() {
        assert!(ClassScores::new(vec!["a".into(), "b".into()], vec![0.5f64, 0.5]).is_ok());
        assert!(ClassScores::new(vec!["a".into(), "b".into()], vec![0.9f64, 0.2]).is_err());
        assert!(ClassScores::new(vec!["a".into()], vec![0.5f64, 0.5]).is_err());
    }

    #[test]
    fn argmax_ties_break_to_first() {
        let s = ClassScores::new(vec!["x".into(), "y".into()], vec![0.5f64, 0.5]).unwrap();
        assert_eq!(s.argmax(), "x");
    }
}
