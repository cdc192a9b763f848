//! Minimal RIFF/WAVE decoder and float32 encoder.
//!
//! Supports PCM 16-bit and IEEE float32 payloads with 1 or 2 channels;
//! stereo is averaged down to mono and integer samples are scaled to
//! `[-1, 1]`. Everything else is an unsupported-codec error.

use std::fs;
use std::path::Path;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::real::Real;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

/// Decode a RIFF/WAVE byte stream into a mono buffer.
pub fn decode_wav<T: Real>(bytes: &[u8]) -> Result<AudioBuffer<T>> {
    let bad = |reason: &str| Error::format("<wav bytes>", reason);

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("not a RIFF/WAVE container"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;

    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).ok_or_else(|| bad("chunk size overflow"))?;
        if body_end > bytes.len() {
            return Err(bad("chunk extends past end of file"));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {} // skip LIST, fact, etc.
        }
        // Chunks are word-aligned.
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| bad("missing fmt chunk"))?;
    let data = data.ok_or_else(|| bad("missing data chunk"))?;

    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedCodec(format!("{channels} channels")));
    }
    if rate == 0 {
        return Err(bad("zero sample rate"));
    }

    let per_channel: Vec<T> = match (format, bits) {
        (FORMAT_PCM, 16) => {
            if data.len() % 2 != 0 {
                return Err(bad("odd data chunk length for 16-bit PCM"));
            }
            data.chunks_exact(2)
                .map(|b| {
                    let v = i16::from_le_bytes([b[0], b[1]]);
                    T::from_f64_c(v as f64 / 32768.0)
                })
                .collect()
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            if data.len() % 4 != 0 {
                return Err(bad("data chunk length not a multiple of 4 for float32"));
            }
            data.chunks_exact(4)
                .map(|b| T::from_f64_c(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
                .collect()
        }
        (f, b) => {
            return Err(Error::UnsupportedCodec(format!("format tag {f} with {b} bits per sample")))
        }
    };

    let samples: Vec<T> = if channels == 2 {
        if per_channel.len() % 2 != 0 {
            return Err(bad("stereo data with odd sample count"));
        }
        let half = T::from_f64_c(0.5);
        per_channel.chunks_exact(2).map(|lr| (lr[0] + lr[1]) * half).collect()
    } else {
        per_channel
    };

    AudioBuffer::new(samples, rate)
}

/// Read and decode a WAV file.
pub fn read_wav<T: Real>(path: &Path) -> Result<AudioBuffer<T>> {
    let bytes = fs::read(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
    decode_wav(&bytes).map_err(|e| match e {
        Error::Format { reason, .. } => Error::format(path, reason),
        other => other,
    })
}

/// Encode a mono buffer as IEEE float32 WAV bytes.
pub fn encode_wav_f32<T: Real>(buf: &AudioBuffer<T>) -> Vec<u8> {
    let n = buf.samples.len();
    let data_len = (n * 4) as u32;
    let mut out = Vec::with_capacity(44 + n * 4);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&buf.sample_rate_hz.to_le_bytes());
    let byte_rate = buf.sample_rate_hz * 4;
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes()); // block align
    out.extend_from_slice(&32u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &buf.samples {
        out.extend_from_slice(&(s.to_f64_c() as f32).to_le_bytes());
    }
    out
}
