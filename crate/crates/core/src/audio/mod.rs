//! Audio front-end: WAV decoding, cleanup, and log-Mel feature extraction.
//!
//! The stage-1 feature path is
//! `decode_wav → trim_silence → spectral_gate → segment → stft_power →
//! log_mel → standardize`, with every step a pure function of its inputs.

mod gate;
mod mel;
mod norm;
mod stft;
mod trim;
mod wav;

pub use gate::spectral_gate;
pub use mel::{build_mel_filterbank, hz_to_mel, log_mel, mel_to_hz, LogMelSpectrogram, MelFilterbank, SpectrogramMeta};
pub use norm::{fit_norm_stats, standardize, NormStats};
pub use stft::{hann_window, stft_power};
pub use trim::trim_silence;
pub use wav::{decode_wav, encode_wav_f32, read_wav};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Mono PCM signal with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    /// Mono samples.
    pub samples: Vec<T>,
    /// Sample rate in Hz.
    pub sample_rate_hz: u32,
}

impl<T: Real> AudioBuffer<T> {
    /// Construct, validating the type invariants.
    pub fn new(samples: Vec<T>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Format {
                path: "<memory>".into(),
                reason: "empty audio buffer".into(),
            });
        }
        if sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio sample".into()));
        }
        Ok(AudioBuffer { samples, sample_rate_hz })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// True if every sample is exactly zero.
    pub fn is_digital_silence(&self) -> bool {
        self.samples.iter().all(|&s| s == T::zero())
    }
}

/// Fixed-length slice of a buffer, zero-padded at the tail if needed.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment<T> {
    /// Exactly `seg_seconds * sample_rate_hz` samples.
    pub samples: Vec<T>,
    /// Sample rate inherited from the source buffer.
    pub sample_rate_hz: u32,
    /// Number of trailing zeros appended to reach full length.
    pub pad_count: usize,
}

/// Split a buffer into equal-length segments, zero-padding the last one.
///
/// Returns `ceil(len / seg_len)` segments; all but possibly the last have
/// `pad_count == 0`. Short inputs yield a single padded segment rather than
/// being dropped.
pub fn segment<T: Real>(buf: &AudioBuffer<T>, seg_seconds: f64) -> Result<Vec<AudioSegment<T>>> {
    if buf.is_empty() {
        return Err(Error::Config("cannot segment an empty buffer".into()));
    }
    if !(seg_seconds > 0.0) {
        return Err(Error::Config(format!("seg_seconds must be positive, got {seg_seconds}")));
    }
    let seg_len = (seg_seconds * buf.sample_rate_hz as f64).round() as usize;
    if seg_len == 0 {
        return Err(Error::Config("segment length rounds to zero samples".into()));
    }
    let mut out = Vec::with_capacity(buf.len().div_ceil(seg_len));
    for chunk in buf.samples.chunks(seg_len) {
        let pad_count = seg_len - chunk.len();
        let mut samples = chunk.to_vec();
        samples.resize(seg_len, T::zero());
        out.push(AudioSegment {
            samples,
            sample_rate_hz: buf.sample_rate_hz,
            pad_count,
        });
    }
    Ok(out)
}

/// Bilinear matrix resize with corner alignment (for feeding fixed-input
/// backends such as 224x224 CNN adapters).
pub fn resize_bilinear<T: Real>(m: &Mat<T>, out_rows: usize, out_cols: usize) -> Mat<T> {
    m.resize_bilinear(out_rows, out_cols)
}
