//! Face embeddings and cosine similarity.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Embedding dimensionality used throughout the gallery pipeline.
pub const EMBED_DIM: usize = 128;

/// 128-dimensional face descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceEmbedding<T> {
    vector: Vec<T>,
}

impl<T: Real> FaceEmbedding<T> {
    /// Validate dimensionality, finiteness, and non-degeneracy.
    pub fn new(vector: Vec<T>) -> Result<Self> {
        if vector.len() != EMBED_DIM {
            return Err(Error::ShapeMismatch {
                expected: format!("{EMBED_DIM}-dimensional embedding"),
                actual: format!("{} dimensions", vector.len()),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding component".into()));
        }
        if vector.iter().all(|&v| v == T::zero()) {
            return Err(Error::ZeroNorm);
        }
        Ok(FaceEmbedding { vector })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.vector
    }

    pub fn norm(&self) -> T {
        self.vector.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

/// `dot(a, b) / (|a| |b|)`, in `[-1, 1]`.
pub fn cosine_similarity<T: Real>(a: &FaceEmbedding<T>, b: &FaceEmbedding<T>) -> Result<T> {
    let (na, nb) = (a.norm(), b.norm());
    if na == T::zero() || nb == T::zero() {
        return Err(Error::ZeroNorm);
    }
    let dot: T = a
        .vector
        .iter()
        .zip(&b.vector)
        .map(|(&x, &y)| x * y)
        .sum();
    let sim = dot / (na * nb);
    // Clamp round-off so downstream distances stay in [0, 2].
    Ok(sim.min(T::one()).max(-T::one()))
}

/// Maps a face crop to its 128-dimensional descriptor.
pub trait FaceEmbedder<T> {
    fn embed(&self, crop: &Mat<T>) -> Result<FaceEmbedding<T>>;
}
