//! Audio signatures: broadband bursts for Negative, quiet low tones for
//! Non-negative.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioBuffer;
use crate::cascade::AffectLabel;
use crate::real::Real;
use crate::synth::CorpusSpec;

/// Burst cycle: 0.25 s on, 0.25 s off, so half of all frames carry bursts.
const BURST_PERIOD_S: f64 = 0.5;
const BURST_ON_S: f64 = 0.25;
/// Burst band, chosen to sit in the top mel bands at 16 kHz.
const BURST_BAND_HZ: (f64, f64) = (2_500.0, 7_000.0);
const BURST_PARTIALS: usize = 48;
const BACKGROUND_HZ: f64 = 200.0;

/// Generate one clip's audio.
///
/// Negative clips: periodic loud bursts of band-limited noise above 2 kHz at
/// `burst_amplitude` peak, over a continuous faint low tone. Non-negative
/// clips: a single continuous tone below 1 kHz at `tone_amplitude`. The two
/// signatures are linearly separable in mean log-Mel band energy.
pub fn gen_audio<T: Real>(
    label: AffectLabel,
    seconds: f64,
    spec: &CorpusSpec,
    rng: &mut ChaCha8Rng,
) -> AudioBuffer<T> {
    assert!(seconds >= 0.5, "clips shorter than 0.5 s are not generated");
    let rate = spec.sample_rate_hz;
    let n = (seconds * rate as f64).round() as usize;
    let dt = 1.0 / rate as f64;

    let samples: Vec<f64> = match label {
        AffectLabel::Negative => {
            let partials: Vec<(f64, f64)> = (0..BURST_PARTIALS)
                .map(|_| {
                    (
                        rng.gen_range(BURST_BAND_HZ.0..BURST_BAND_HZ.1),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            let burst_raw = |t: f64| -> f64 {
                partials
                    .iter()
                    .map(|&(f, ph)| (std::f64::consts::TAU * f * t + ph).sin())
                    .sum()
            };
            // Scale bursts so their peak hits burst_amplitude exactly.
            let mut peak = 0.0f64;
            for i in 0..n {
                let t = i as f64 * dt;
                if (t % BURST_PERIOD_S) < BURST_ON_S {
                    peak = peak.max(burst_raw(t).abs());
                }
            }
            let scale = if peak > 0.0 { spec.burst_amplitude / peak } else { 0.0 };
            (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    let bg = spec.background_amplitude
                        * (std::f64::consts::TAU * BACKGROUND_HZ * t).sin();
                    let burst = if (t % BURST_PERIOD_S) < BURST_ON_S {
                        burst_raw(t) * scale
                    } else {
                        0.0
                    };
                    (bg + burst).clamp(-1.0, 1.0)
                })
                .collect()
        }
        AffectLabel::Neutral | AffectLabel::Positive => {
            let freq = rng.gen_range(250.0..800.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    spec.tone_amplitude * (std::f64::consts::TAU * freq * t + phase).sin()
                })
                .collect()
        }
    };

    AudioBuffer {
        samples: samples.into_iter().map(T::from_f64_c).collect(),
        sample_rate_hz: rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{build_mel_filterbank, log_mel, segment, stft_power, SpectrogramMeta};
    use rand::SeedableRng;

    fn mean_top_band_logmel(buf: &AudioBuffer<f64>) -> f64 {
        let seg = segment(buf, 3.0).unwrap().remove(0);
        let power = stft_power(&seg, 2048, 512).unwrap();
        let fb = build_mel_filterbank(64, 2048, buf.sample_rate_hz, 0.0, 8000.0).unwrap();
        let lm = log_mel(&power, &fb, 1e-10, SpectrogramMeta::default()).unwrap();
        let mut sum = 0.0;
        let mut count = 0usize;
        for m in 48..64 {
            for &v in lm.values.row(m) {
                sum += v;
                count += 1;
            }
        }
        sum / count as f64
    }

    #[test]
    fn exact_sample_count() {
        let spec = CorpusSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let buf: AudioBuffer<f64> = gen_audio(AffectLabel::Neutral, 3.0, &spec, &mut rng);
        assert_eq!(buf.samples.len(), 48_000);
    }

    #[test]
    fn seeded_generation_is_bit_identical() {
        let spec = CorpusSpec::default();
        let a: AudioBuffer<f64> =
            gen_audio(AffectLabel::Negative, 2.0, &spec, &mut ChaCha8Rng::seed_from_u64(5));
        let b: AudioBuffer<f64> =
            gen_audio(AffectLabel::Negative, 2.0, &spec, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn class_signatures_separated_by_six_nats_in_top_bands() {
        let spec = CorpusSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let neg: AudioBuffer<f64> = gen_audio(AffectLabel::Negative, 3.0, &spec, &mut rng);
        let neu: AudioBuffer<f64> = gen_audio(AffectLabel::Neutral, 3.0, &spec, &mut rng);
        let pos: AudioBuffer<f64> = gen_audio(AffectLabel::Positive, 3.0, &spec, &mut rng);
        let m_neg = mean_top_band_logmel(&neg);
        let m_neu = mean_top_band_logmel(&neu);
        let m_pos = mean_top_band_logmel(&pos);
        assert!(m_neg - m_neu >= 6.0, "margin {}", m_neg - m_neu);
        assert!(m_neg - m_pos >= 6.0, "margin {}", m_neg - m_pos);
    }

    #[test]
    fn amplitudes_stay_in_range() {
        let spec = CorpusSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for label in [AffectLabel::Negative, AffectLabel::Neutral] {
            let buf: AudioBuffer<f64> = gen_audio(label, 1.5, &spec, &mut rng);
            assert!(buf.samples.iter().all(|s| s.abs() <= 1.0));
        }
    }

    #[test]
    fn negative_bursts_cover_at_least_40_percent() {
        let spec = CorpusSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let buf: AudioBuffer<f64> = gen_audio(AffectLabel::Negative, 4.0, &spec, &mut rng);
        // 50 ms frames; a frame is "burst" if its peak is well above background.
        let frame = (0.05 * spec.sample_rate_hz as f64) as usize;
        let frames: Vec<&[f64]> = buf.samples.chunks(frame).collect();
        let loud = frames
            .iter()
            .filter(|f| f.iter().any(|s| s.abs() > spec.burst_amplitude * 0.2))
            .count();
        assert!(
            loud as f64 / frames.len() as f64 >= 0.4,
            "only {loud}/{} frames loud",
            frames.len()
        );
    }
}
