//! Silence removal.

use crate::audio::AudioBuffer;
use crate::real::Real;

/// Analysis frame length used for RMS gating, in milliseconds.
const FRAME_MS: f64 = 50.0;

/// Remove long silent stretches from a buffer.
///
/// The buffer is scanned in 50 ms frames; a frame is silent when its RMS is
/// below the loudest frame's RMS plus `gate_db` (a negative offset). Maximal
/// runs of silent frames longer than `min_silence_ms` are dropped and the
/// rest is concatenated in order. A fully silent (all-zero) buffer yields the
/// single loudest frame window so the result is never empty.
///
/// Idempotent: re-trimming the output is a no-op, because removal works on
/// whole frames and never merges the surviving short silent runs.
pub fn trim_silence<T: Real>(buf: &AudioBuffer<T>, gate_db: f64, min_silence_ms: f64) -> AudioBuffer<T> {
    debug_assert!(gate_db < 0.0, "gate_db is relative to peak and must be negative");
    debug_assert!(min_silence_ms > 0.0);

    let frame_len = ((FRAME_MS / 1000.0) * buf.sample_rate_hz as f64).round().max(1.0) as usize;
    let frames: Vec<&[T]> = buf.samples.chunks(frame_len).collect();
    let rms: Vec<f64> = frames.iter().map(|f| frame_rms(f)).collect();

    let (peak_idx, &peak) = rms
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("buffer is non-empty");

    if peak == 0.0 {
        // Digital silence end to end: return the loudest (first) frame window.
        return AudioBuffer {
            samples: frames[peak_idx].to_vec(),
            sample_rate_hz: buf.sample_rate_hz,
        };
    }

    let threshold = peak * 10f64.powf(gate_db / 20.0);
    let silent: Vec<bool> = rms.iter().map(|&r| r < threshold).collect();

    let mut keep = vec![true; frames.len()];
    let mut i = 0;
    while i < frames.len() {
        if silent[i] {
            let start = i;
            while i < frames.len() && silent[i] {
                i += 1;
            }
            let run_samples: usize = frames[start..i].iter().map(|f| f.len()).sum();
            let run_ms = run_samples as f64 / buf.sample_rate_hz as f64 * 1000.0;
            if run_ms > min_silence_ms {
                keep[start..i].iter_mut().for_each(|k| *k = false);
            }
        } else {
            i += 1;
        }
    }

    let samples: Vec<T> = frames
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .flat_map(|(f, _)| f.iter().copied())
        .collect();
    debug_assert!(!samples.is_empty(), "the peak frame is never silent");

    AudioBuffer {
        samples,
        sample_rate_hz: buf.sample_rate_hz,
    }
}

fn frame_rms<T: Real>(frame: &[T]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = frame.iter().map(|&s| {
        let v = s.to_f64_c();
        v * v
    }).sum();
    (sum_sq / frame.len() as f64).sqrt()
}
