//! Mel filterbank construction and log-Mel spectrograms.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::binio;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

const MEL_MAGIC: &[u8; 6] = b"AFMEL1";

/// Hz to mel, HTK convention: `2595 * log10(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Mel to Hz, inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank mapping FFT bins to mel bands.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank<T> {
    /// `(n_mels, n_fft/2 + 1)` weight matrix; each row is one triangle.
    pub weights: Mat<T>,
    /// Lower band edge in Hz.
    pub fmin_hz: f64,
    /// Upper band edge in Hz.
    pub fmax_hz: f64,
}

impl<T: Real> MelFilterbank<T> {
    pub fn n_mels(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.cols()
    }
}

/// Build a triangular filterbank with centers equally spaced on the mel axis.
///
/// Filters are unit-peak triangles evaluated at the FFT bin centers
/// (`k * sr / n_fft`). If the band is too narrow for `n_mels` distinct
/// filters, some row would be entirely zero and a configuration error is
/// returned instead.
pub fn build_mel_filterbank<T: Real>(
    n_mels: usize,
    n_fft: usize,
    sample_rate_hz: u32,
    fmin_hz: f64,
    fmax_hz: f64,
) -> Result<MelFilterbank<T>> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    if n_mels < 2 {
        return Err(Error::Config(format!("n_mels must be at least 2, got {n_mels}")));
    }
    if !(0.0 <= fmin_hz && fmin_hz < fmax_hz && fmax_hz <= nyquist) {
        return Err(Error::Config(format!(
            "band edges must satisfy 0 <= fmin < fmax <= {nyquist}, got {fmin_hz}..{fmax_hz}"
        )));
    }

    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin_hz);
    let mel_hi = hz_to_mel(fmax_hz);
    // n_mels + 2 edge points; triangle m spans points m .. m+2.
    let hz_points: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut weights = Mat::zeros(n_mels, n_bins);
    for m in 0..n_mels {
        let (left, center, right) = (hz_points[m], hz_points[m + 1], hz_points[m + 2]);
        if !(left < center && center < right) {
            return Err(Error::Config(format!(
                "mel band {m} collapsed ({left:.3}/{center:.3}/{right:.3} Hz): band too narrow for {n_mels} filters"
            )));
        }
        let mut any_positive = false;
        for k in 0..n_bins {
            let f = k as f64 * sample_rate_hz as f64 / n_fft as f64;
            let up = (f - left) / (center - left);
            let down = (right - f) / (right - center);
            let w = up.min(down).max(0.0);
            if w > 0.0 {
                weights.set(m, k, T::from_f64_c(w));
                any_positive = true;
            }
        }
        if !any_positive {
            return Err(Error::Config(format!(
                "mel band {m} covers no FFT bin: band too narrow for {n_mels} filters at n_fft {n_fft}"
            )));
        }
    }

    Ok(MelFilterbank {
        weights,
        fmin_hz,
        fmax_hz,
    })
}

/// Provenance carried alongside a spectrogram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpectrogramMeta {
    /// Source segment identifier (clip id plus segment ordinal).
    pub segment_id: String,
    pub n_fft: usize,
    pub hop: usize,
}

/// Log-compressed mel power matrix, `(n_mels, n_frames)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelSpectrogram<T> {
    pub values: Mat<T>,
    pub meta: SpectrogramMeta,
}

impl<T: Real> LogMelSpectrogram<T> {
    /// Write in `AFMEL1` format: magic, u32-LE rows, u32-LE cols, then
    /// float32-LE values row-major. Save→load round trips are bit-exact.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        binio::write_magic(&mut w, MEL_MAGIC)?;
        binio::write_u32(&mut w, self.values.rows() as u32)?;
        binio::write_u32(&mut w, self.values.cols() as u32)?;
        for &v in self.values.as_slice() {
            binio::write_f32(&mut w, v.to_f64_c() as f32)?;
        }
        Ok(())
    }

    /// Read an `AFMEL1` file. The metadata block is not persisted by the
    /// format and comes back defaulted.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        binio::expect_magic(&mut r, MEL_MAGIC, path)?;
        let rows = binio::read_u32(&mut r, path)? as usize;
        let cols = binio::read_u32(&mut r, path)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(T::from_f64_c(binio::read_f32(&mut r, path)? as f64));
        }
        binio::expect_eof(&mut r, path)?;
        Ok(LogMelSpectrogram {
            values: Mat::from_vec(rows, cols, data)?,
            meta: SpectrogramMeta::default(),
        })
    }
}

/// Apply a filterbank to a power spectrogram and log-compress.
///
/// `values = ln(max(weights * power, floor))`, shape `(n_mels, n_frames)`.
pub fn log_mel<T: Real>(
    power: &Mat<T>,
    fb: &MelFilterbank<T>,
    floor: f64,
    meta: SpectrogramMeta,
) -> Result<LogMelSpectrogram<T>> {
    if power.rows() != fb.n_bins() {
        return Err(Error::ShapeMismatch {
            expected: format!("power spectrogram with {} bins", fb.n_bins()),
            actual: format!("{} bins", power.rows()),
        });
    }
    let floor_t = T::from_f64_c(floor);
    let mel_power = fb.weights.matmul(power)?;
    let values = mel_power.map(|v| if v > floor_t { v.ln() } else { floor_t.ln() });
    Ok(LogMelSpectrogram { values, meta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_formula_anchors() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01); // 2595 * log10(2)
        let f = 1234.5;
        assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
    }

    #[test]
    fn default_filterbank_shape_and_rows() {
        let fb: MelFilterbank<f64> = build_mel_filterbank(64, 2048, 16_000, 0.0, 8000.0).unwrap();
        assert_eq!(fb.weights.shape(), (64, 1025));
        for m in 0..64 {
            let row = fb.weights.row(m);
            assert!(row.iter().any(|&w| w > 0.0), "row {m} has no positive entry");
            assert!(row.iter().all(|&w| w >= 0.0));
            // Unimodal: weights rise to a single peak then fall.
            let peak = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            for k in 1..=peak {
                assert!(row[k] >= row[k - 1] - 1e-12);
            }
            for k in peak + 1..row.len() {
                assert!(row[k] <= row[k - 1] + 1e-12);
            }
        }
    }

    #[test]
    fn too_narrow_band_is_config_error() {
        let r: Result<MelFilterbank<f64>> = build_mel_filterbank(64, 64, 16_000, 100.0, 140.0);
        assert!(r.is_err());
    }

    #[test]
    fn zero_power_hits_floor() {
        let fb: MelFilterbank<f64> = build_mel_filterbank(8, 256, 16_000, 0.0, 8000.0).unwrap();
        let power = Mat::zeros(129, 10);
        let lm = log_mel(&power, &fb, 1e-10, SpectrogramMeta::default()).unwrap();
        for &v in lm.values.as_slice() {
            assert_eq!(v, 1e-10f64.ln());
        }
    }

    #[test]
    fn doubling_power_adds_ln2() {
        let fb: MelFilterbank<f64> = build_mel_filterbank(8, 256, 16_000, 0.0, 8000.0).unwrap();
        let power = Mat::filled(129, 5, 1.0);
        let doubled = power.map(|v| v * 2.0);
        let a = log_mel(&power, &fb, 1e-10, SpectrogramMeta::default()).unwrap();
        let b = log_mel(&doubled, &fb, 1e-10, SpectrogramMeta::default()).unwrap();
        for (&x, &y) in a.values.as_slice().iter().zip(b.values.as_slice()) {
            if x > 1e-10f64.ln() {
                assert!((y - x - std::f64::consts::LN_2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let fb: MelFilterbank<f64> = build_mel_filterbank(8, 256, 16_000, 0.0, 8000.0).unwrap();
        let power = Mat::zeros(64, 10);
        assert!(log_mel(&power, &fb, 1e-10, SpectrogramMeta::default()).is_err());
    }

    #[test]
    fn monotone_in_power() {
        let fb: MelFilterbank<f64> = build_mel_filterbank(8, 256, 16_000, 0.0, 8000.0).unwrap();
        let lo = Mat::from_fn(129, 6, |r, c| ((r + c) % 7) as f64 * 0.1);
        let hi = lo.map(|v| v + 0.05);
        let a = log_mel(&lo, &fb, 1e-10, SpectrogramMeta::default()).unwrap();
        let b = log_mel(&hi, &fb, 1e-10, SpectrogramMeta::default()).unwrap();
        for (&x, &y) in a.values.as_slice().iter().zip(b.values.as_slice()) {
            assert!(y >= x);
        }
    }
}
