//! Short-time Fourier transform producing power spectra.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioSegment;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Periodic Hann window of length `n`.
pub fn hann_window<T: Real>(n: usize) -> Vec<T> {
    let two_pi = T::from_f64_c(2.0 * std::f64::consts::PI);
    let half = T::from_f64_c(0.5);
    (0..n)
        .map(|i| half - half * (two_pi * T::from_usize(i).unwrap() / T::from_usize(n).unwrap()).cos())
        .collect()
}

/// Reflected index into a signal of length `len` (multi-bounce, no edge repeat).
fn reflect(idx: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut i = idx.rem_euclid(period);
    if i >= len as isize {
        i = period - i;
    }
    i as usize
}

/// Power spectrogram of one segment.
///
/// Frames are Hann-windowed and centered with reflection padding, so frame
/// `m` is centered on sample `m * hop`. The output has shape
/// `(n_fft/2 + 1, n_frames)` with `n_frames = floor(len / hop) + 1`, and each
/// entry is squared magnitude.
pub fn stft_power<T: Real>(seg: &AudioSegment<T>, n_fft: usize, hop: usize) -> Result<Mat<T>> {
    if !n_fft.is_power_of_two() {
        return Err(Error::Config(format!("n_fft must be a power of two, got {n_fft}")));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::Config(format!("hop must satisfy 0 < hop <= n_fft, got {hop}")));
    }
    let len = seg.samples.len();
    if len < hop {
        return Err(Error::ShapeMismatch {
            expected: format!("segment of at least {hop} samples"),
            actual: format!("{len} samples"),
        });
    }

    let pad = n_fft / 2;
    let n_frames = len / hop + 1;
    let n_bins = n_fft / 2 + 1;
    let window = hann_window::<T>(n_fft);

    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(n_fft);

    let sample_at = |padded_idx: usize| -> T {
        let src = padded_idx as isize - pad as isize;
        seg.samples[reflect(src, len)]
    };

    let mut out = Mat::zeros(n_bins, n_frames);
    let mut frame: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); n_fft];
    for m in 0..n_frames {
        let start = m * hop;
        for (i, (slot, &w)) in frame.iter_mut().zip(window.iter()).enumerate() {
            *slot = Complex::new(sample_at(start + i) * w, T::zero());
        }
        fft.process(&mut frame);
        for (k, bin) in frame.iter().take(n_bins).enumerate() {
            out.set(k, m, bin.norm_sqr());
        }
    }
    Ok(out)
}
