//! Adapter exposing an external inference runtime as a [`Classifier`].
//!
//! Real CNN backends (the usual carrier is an exported network in an open
//! interchange format, loaded by some runtime) plug into the cascade here;
//! the adapter only checks shapes and normalizes scores, never touching the
//! features themselves.

use std::path::Path;

use crate::error::{Error, Result};
use crate::infer::{softmax, ClassScores, Classifier, InputShape};
use crate::mat::Mat;
use crate::real::Real;

/// External inference runtime interface.
pub trait ExternalRuntime<T>: Send + Sync {
    /// Input shape the loaded model expects.
    fn input_shape(&self) -> (usize, usize);
    /// Output class labels, in output order.
    fn class_labels(&self) -> &[String];
    /// Raw model outputs for one input (probabilities or logits).
    fn infer(&self, input: &Mat<T>) -> std::result::Result<Vec<T>, String>;
}

/// [`Classifier`] backed by an [`ExternalRuntime`].
pub struct ExternalModelAdapter<T> {
    runtime: Box<dyn ExternalRuntime<T>>,
    labels: Vec<String>,
    shape: (usize, usize),
}

impl<T> std::fmt::Debug for ExternalModelAdapter<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalModelAdapter")
            .field("labels", &self.labels)
            .field("shape", &self.shape)
            .finish_non_exhaustive()
    }
}

/// Wrap a runtime that has loaded `model_file` behind the classifier
/// interface.
///
/// Fails if the model file is missing or the runtime declares a degenerate
/// shape or class set; inference failures surface as runtime errors with
/// their cause attached.
pub fn external_model_adapter<T: Real>(
    model_file: &Path,
    runtime: Box<dyn ExternalRuntime<T>>,
) -> Result<ExternalModelAdapter<T>> {
    if !model_file.exists() {
        return Err(Error::Runtime(format!(
            "model file not found: {}",
            model_file.display()
        )));
    }
    let shape = runtime.input_shape();
    if shape.0 == 0 || shape.1 == 0 {
        return Err(Error::Runtime(format!(
            "runtime declares degenerate input shape {}x{}",
            shape.0, shape.1
        )));
    }
    let labels = runtime.class_labels().to_vec();
    if labels.len() < 2 {
        return Err(Error::Runtime(format!(
            "runtime declares {} classes, need at least 2",
            labels.len()
        )));
    }
    Ok(ExternalModelAdapter { runtime, labels, shape })
}

impl<T: Real> Classifier<T> for ExternalModelAdapter<T> {
    fn class_labels(&self) -> &[String] {
        &self.labels
    }

    fn input_shape(&self) -> InputShape {
        InputShape::Exact(self.shape.0, self.shape.1)
    }

    fn predict_scores(&self, input: &Mat<T>) -> Result<ClassScores<T>> {
        self.input_shape().check(input)?;
        let raw = self
            .runtime
            .infer(input)
            .map_err(|cause| Error::Runtime(format!("inference failed: {cause}")))?;
        if raw.len() != self.labels.len() {
            return Err(Error::Runtime(format!(
                "runtime returned {} outputs for {} classes",
                raw.len(),
                self.labels.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Runtime("runtime returned non-finite output".into()));
        }
        // Non-negative outputs are treated as unnormalized probabilities;
        // anything with a negative component is treated as logits.
        let sum: T = raw.iter().copied().sum();
        let probs = if raw.iter().all(|&v| v >= T::zero()) && sum > T::zero() {
            raw.into_iter().map(|v| v / sum).collect()
        } else {
            softmax(&raw)
        };
        ClassScores::new(self.labels.clone(), probs)
    }
}
