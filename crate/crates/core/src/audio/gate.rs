//! Block-wise spectral noise gate.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::real::Real;

const BLOCK: usize = 2048;
/// Half-width of the running-median window used to regularize the floor.
const MEDIAN_HALF_WIDTH: usize = 16;
/// A floor spike this far above its local median is signal, not noise.
const FLOOR_CAP: f64 = 4.0;

/// Attenuate spectral content close to the per-frequency noise floor.
///
/// The buffer is processed in non-overlapping 2048-sample blocks. The noise
/// floor per frequency bin is the mean magnitude of that bin over the
/// quietest 10% of blocks, capped at four times its cross-frequency running
/// median so that persistent narrowband signal (a steady tone occupies its
/// bin in every block, quiet ones included) does not inflate its own floor.
/// Bins whose magnitude is within `reduction_db` of the floor are attenuated
/// by `reduction_db`.
///
/// Block resynthesis keeps the output exactly the input length, and since
/// every gain is at most 1 the signal energy never increases.
/// `reduction_db = 0` is the identity up to FFT round-trip noise. Buffers
/// shorter than one block are returned unchanged.
pub fn spectral_gate<T: Real>(buf: &AudioBuffer<T>, reduction_db: f64) -> AudioBuffer<T> {
    debug_assert!(reduction_db >= 0.0);
    if buf.len() < BLOCK {
        return buf.clone();
    }

    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(BLOCK);
    let ifft = planner.plan_fft_inverse(BLOCK);

    let n_blocks = buf.len().div_ceil(BLOCK);
    let mut spectra: Vec<Vec<Complex<T>>> = Vec::with_capacity(n_blocks);
    let mut block_energy: Vec<(f64, usize)> = Vec::with_capacity(n_blocks);
    for (i, chunk) in buf.samples.chunks(BLOCK).enumerate() {
        let mut block: Vec<Complex<T>> =
            chunk.iter().map(|&s| Complex::new(s, T::zero())).collect();
        block.resize(BLOCK, Complex::new(T::zero(), T::zero()));
        fft.process(&mut block);
        let energy: f64 = block.iter().map(|c| c.norm_sqr().to_f64_c()).sum();
        block_energy.push((energy, i));
        spectra.push(block);
    }

    // Quietest decile of blocks by total energy.
    block_energy.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quietest: Vec<usize> = block_energy
        .iter()
        .take((n_blocks / 10).max(1))
        .map(|&(_, i)| i)
        .collect();

    let mut floor = vec![0.0f64; BLOCK];
    for (k, f) in floor.iter_mut().enumerate() {
        *f = quietest
            .iter()
            .map(|&m| spectra[m][k].norm().to_f64_c())
            .sum::<f64>()
            / quietest.len() as f64;
    }
    let floor = regularize_floor(&floor);

    let open = 10f64.powf(reduction_db / 20.0);
    let cut = T::from_f64_c(10f64.powf(-reduction_db / 20.0));
    for spectrum in &mut spectra {
        for (k, bin) in spectrum.iter_mut().enumerate() {
            if bin.norm().to_f64_c() <= floor[k] * open {
                *bin = *bin * cut;
            }
        }
    }

    let scale = T::one() / T::from_usize(BLOCK).unwrap();
    let mut samples: Vec<T> = Vec::with_capacity(buf.len());
    for (i, mut spectrum) in spectra.into_iter().enumerate() {
        ifft.process(&mut spectrum);
        let start = i * BLOCK;
        let take = (buf.len() - start).min(BLOCK);
        samples.extend(spectrum[..take].iter().map(|c| c.re * scale));
    }

    AudioBuffer {
        samples,
        sample_rate_hz: buf.sample_rate_hz,
    }
}

/// Cap each floor entry at `FLOOR_CAP` times its local running median.
fn regularize_floor(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    let mut out = Vec::with_capacity(n);
    let mut window = Vec::with_capacity(2 * MEDIAN_HALF_WIDTH + 1);
    for k in 0..n {
        let lo = k.saturating_sub(MEDIAN_HALF_WIDTH);
        let hi = (k + MEDIAN_HALF_WIDTH + 1).min(n);
        window.clear();
        window.extend_from_slice(&raw[lo..hi]);
        window.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = window[window.len() / 2];
        out.push(raw[k].min(median * FLOOR_CAP));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn energy(samples: &[f64]) -> f64 {
        samples.iter().map(|&s| s * s).sum()
    }

    #[test]
    fn short_buffer_unchanged() {
        let buf = AudioBuffer::new(vec![0.3f64; 100], 16_000).unwrap();
        let out = spectral_gate(&buf, 12.0);
        assert_eq!(out.samples, buf.samples);
    }

    #[test]
    fn silence_in_silence_out() {
        let buf = AudioBuffer::new(vec![0.0f64; 10_000], 16_000).unwrap();
        let out = spectral_gate(&buf, 12.0);
        assert!(out.samples.iter().all(|&s| s.abs() < 1e-12));
        assert_eq!(out.samples.len(), buf.samples.len());
    }

    #[test]
    fn zero_reduction_preserves_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<f64> = (0..30_000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let buf = AudioBuffer::new(samples, 16_000).unwrap();
        let out = spectral_gate(&buf, 0.0);
        let (ein, eout) = (energy(&buf.samples), energy(&out.samples));
        assert!((ein - eout).abs() / ein < 1e-6);
    }

    #[test]
    fn energy_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = rng.gen_range(2048..40_000);
            let samples: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let buf = AudioBuffer::new(samples, 16_000).unwrap();
            let out = spectral_gate(&buf, rng.gen_range(0.0..24.0));
            assert_eq!(out.samples.len(), buf.samples.len());
            assert!(energy(&out.samples) <= energy(&buf.samples) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn tone_over_noise_snr_improves() {
        let rate = 16_000u32;
        let n = 3 * rate as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tone_amp = 0.5; // -6 dBFS
        let noise_amp = 0.001; // -60 dBFS
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                tone_amp * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate as f64).sin()
                    + rng.gen_range(-noise_amp..noise_amp)
            })
            .collect();
        let buf = AudioBuffer::new(samples, rate).unwrap();
        let out = spectral_gate(&buf, 10.0);

        // SNR oracle: least-squares projection onto the 1 kHz quadrature pair
        // (a whole number of periods), residual is everything else.
        let snr = |s: &[f64]| {
            let n = s.len() as f64;
            let (mut cs, mut sn) = (0.0, 0.0);
            for (i, &v) in s.iter().enumerate() {
                let ph = 2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate as f64;
                cs += v * ph.cos();
                sn += v * ph.sin();
            }
            let (a, b) = (2.0 * cs / n, 2.0 * sn / n);
            let tone_energy = (a * a + b * b) / 2.0 * n;
            let total: f64 = s.iter().map(|&v| v * v).sum();
            tone_energy / (total - tone_energy).max(1e-30)
        };
        // 8192 samples = 512 full periods of 1 kHz at 16 kHz.
        let snr_in = snr(&buf.samples[..8192]);
        let snr_out = snr(&out.samples[..8192]);
        assert!(
            snr_out > snr_in,
            "expected SNR gain, got in={snr_in:.1} out={snr_out:.1}"
        );
    }
}
