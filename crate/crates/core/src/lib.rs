//! Two-stage audio-visual affect classification for play-therapy clips.
//!
//! Stage 1 flags Negative clips from speech: audio is cleaned, cut into 3 s
//! segments, turned into standardized log-Mel spectrograms, and classified
//! per segment. Stage 2 separates Positive from Neutral by majority vote
//! over per-frame facial-expression predictions, counting only faces that
//! match an identity gallery of the target children.
//!
//! The numeric core is generic over the scalar type (`f32`/`f64`) via
//! [`real::Real`]; the shipped pipeline, synthetic corpus, and CLI all run
//! at the [`Scalar`] default.

pub mod audio;
mod binio;
pub mod cascade;
pub mod config;
pub mod error;
pub mod infer;
pub mod manifest;
pub mod mat;
pub mod metrics;
pub mod par;
pub mod real;
pub mod synth;
pub mod train;
pub mod vision;

pub use error::{Error, Result};
pub use mat::Mat;
pub use real::Real;

/// Default scalar for the shipped pipeline and CLI.
pub type Scalar = f64;

/// Matrix at the default precision.
pub type Matrix = Mat<Scalar>;

/// Audio buffer at the default precision.
pub type Audio = audio::AudioBuffer<Scalar>;

/// Log-Mel spectrogram at the default precision.
pub type LogMel = audio::LogMelSpectrogram<Scalar>;
