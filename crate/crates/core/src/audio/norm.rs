//! Global standardization statistics for log-Mel corpora.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::audio::LogMelSpectrogram;
use crate::binio;
use crate::error::{Error, Result};
use crate::real::Real;

const NORM_MAGIC: &[u8; 6] = b"AFNRM1";

/// Scalar mean and standard deviation pooled over a training corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    /// Population standard deviation; always positive.
    pub std: f64,
}

impl NormStats {
    /// Identity transform.
    pub fn identity() -> Self {
        NormStats { mean: 0.0, std: 1.0 }
    }

    /// Persist as `AFNRM1`: magic followed by two float64-LE values.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        binio::write_magic(&mut w, NORM_MAGIC)?;
        binio::write_f64(&mut w, self.mean)?;
        binio::write_f64(&mut w, self.std)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        binio::expect_magic(&mut r, NORM_MAGIC, path)?;
        let mean = binio::read_f64(&mut r, path)?;
        let std = binio::read_f64(&mut r, path)?;
        binio::expect_eof(&mut r, path)?;
        if !(std > 0.0) {
            return Err(Error::format(path, format!("non-positive std {std}")));
        }
        Ok(NormStats { mean, std })
    }
}

/// Pool mean and population std over every entry of every spectrogram.
pub fn fit_norm_stats<T: Real>(corpus: &[LogMelSpectrogram<T>]) -> Result<NormStats> {
    let total: usize = corpus.iter().map(|s| s.values.len()).sum();
    if total == 0 {
        return Err(Error::DegenerateCorpus("empty spectrogram corpus".into()));
    }
    let mut sum = 0.0f64;
    for s in corpus {
        for &v in s.values.as_slice() {
            sum += v.to_f64_c();
        }
    }
    let mean = sum / total as f64;
    let mut var = 0.0f64;
    for s in corpus {
        for &v in s.values.as_slice() {
            let d = v.to_f64_c() - mean;
            var += d * d;
        }
    }
    let std = (var / total as f64).sqrt();
    if std <= 0.0 {
        return Err(Error::DegenerateCorpus(
            "corpus has zero variance; cannot standardize".into(),
        ));
    }
    Ok(NormStats { mean, std })
}

/// Map every entry through `x -> (x - mean) / std`.
pub fn standardize<T: Real>(s: &LogMelSpectrogram<T>, stats: &NormStats) -> LogMelSpectrogram<T> {
    let mean = T::from_f64_c(stats.mean);
    let inv = T::from_f64_c(1.0 / stats.std);
    LogMelSpectrogram {
        values: s.values.map(|v| (v - mean) * inv),
        meta: s.meta.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::SpectrogramMeta;
    use crate::mat::Mat;

    fn constant_spec(value: f64) -> LogMelSpectrogram<f64> {
        LogMelSpectrogram {
            values: Mat::filled(4, 6, value),
            meta: SpectrogramMeta::default(),
        }
    }

    #[test]
    fn two_constant_matrices_fix_population_convention() {
        let corpus = vec![constant_spec(2.0), constant_spec(4.0)];
        let stats = fit_norm_stats(&corpus).unwrap();
        assert!((stats.mean - 3.0).abs() < 1e-12);
        assert!((stats.std - 1.0).abs() < 1e-12); // population, not sample
        let a = standardize(&corpus[0], &stats);
        let b = standardize(&corpus[1], &stats);
        assert!(a.values.as_slice().iter().all(|&v| (v + 1.0).abs() < 1e-12));
        assert!(b.values.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn standardized_corpus_has_zero_mean_unit_std() {
        let specs: Vec<LogMelSpectrogram<f64>> = (0..5)
            .map(|i| LogMelSpectrogram {
                values: Mat::from_fn(8, 9, |r, c| ((r * 13 + c * 7 + i * 29) % 31) as f64 * 0.17 - 1.3),
                meta: SpectrogramMeta::default(),
            })
            .collect();
        let stats = fit_norm_stats(&specs).unwrap();
        let standardized: Vec<_> = specs.iter().map(|s| standardize(s, &stats)).collect();
        let again = fit_norm_stats(&standardized).unwrap();
        assert!(again.mean.abs() < 1e-9);
        assert!((again.std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_stats_are_a_noop() {
        let s = constant_spec(0.42);
        let out = standardize(&s, &NormStats::identity());
        assert_eq!(out.values, s.values);
    }

    #[test]
    fn zero_variance_corpus_rejected() {
        let corpus = vec![constant_spec(1.5), constant_spec(1.5)];
        assert!(matches!(fit_norm_stats(&corpus), Err(Error::DegenerateCorpus(_))));
    }

    #[test]
    fn norm_stats_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.afnrm");
        let stats = NormStats { mean: -3.25, std: 0.875 };
        stats.save(&path).unwrap();
        let loaded = NormStats::load(&path).unwrap();
        assert_eq!(stats, loaded);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 6 + 16);
    }
}
