//! Training harness: turns a corpus manifest into fitted stage-1 and
//! stage-2 native backends, and drives batch prediction.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{fit_norm_stats, read_wav, standardize, NormStats};
use crate::cascade::{
    classify_clip, extract_logmels, AffectLabel, CascadeConfig, Components, Stage1Input,
    Stage1Label,
};
use crate::config::{Balance, RunConfig};
use crate::error::{Error, Result};
use crate::infer::{downsample, train_linear, weighted_sampler, LinearModel};
use crate::manifest::ManifestEntry;
use crate::mat::Mat;
use crate::par::run_indexed;
use crate::cascade::PredictionRow;
use crate::real::Real;
use crate::vision::marker::{MarkerDetector, MarkerEmbedder};
use crate::vision::{
    detect_faces, match_gallery, prepare_face_crop, sample_frames, CropMode, DirFrameSource,
    FaceGallery, SamplingMode,
};

/// The three artifacts `train` produces.
#[derive(Debug, Clone)]
pub struct TrainedBackends<T> {
    pub ser: LinearModel<T>,
    pub stats: NormStats,
    pub fer: LinearModel<T>,
}

/// FNV-1a, used to derive per-clip RNG streams from the run seed.
fn clip_seed(seed: u64, clip_id: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in clip_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ seed
}

/// Fit the stage-1 classifier and its normalization stats from every clip
/// in `entries`.
pub fn fit_stage1<T: Real>(
    entries: &[ManifestEntry],
    cfg: &RunConfig,
) -> Result<(LinearModel<T>, NormStats)> {
    let cascade_cfg = cfg.cascade_config();
    let mut spectrograms = Vec::new();
    let mut labels: Vec<Stage1Label> = Vec::new();
    for entry in entries {
        let audio = read_wav::<T>(&entry.audio_path).map_err(|e| e.for_clip(&entry.clip_id))?;
        for lm in extract_logmels(&entry.clip_id, &audio, &cascade_cfg)
            .map_err(|e| e.for_clip(&entry.clip_id))?
        {
            spectrograms.push(lm);
            labels.push(entry.label.stage1());
        }
    }
    if !labels.contains(&Stage1Label::Negative) || !labels.contains(&Stage1Label::NonNegative) {
        return Err(Error::TrainingData(
            "stage 1 needs both negative and non-negative clips".into(),
        ));
    }

    let stats = fit_norm_stats(&spectrograms)?;
    let data: Vec<(Mat<T>, String)> = spectrograms
        .iter()
        .zip(&labels)
        .map(|(lm, label)| {
            let standardized = standardize(lm, &stats);
            let features = match cascade_cfg.stage1_input {
                Stage1Input::Mel => standardized.values,
                Stage1Input::Resized => standardized
                    .values
                    .resize_bilinear(cascade_cfg.resize, cascade_cfg.resize),
            };
            (features, label.as_str().to_string())
        })
        .collect();

    let model = fit_balanced(data, cfg)?;
    Ok((model, stats))
}

/// Fit the stage-2 classifier from gallery-matched face crops of the
/// Neutral and Positive clips in `entries`.
pub fn fit_stage2<T: Real>(
    entries: &[ManifestEntry],
    gallery: &FaceGallery<T>,
    cfg: &RunConfig,
) -> Result<LinearModel<T>> {
    let detector = MarkerDetector;
    let embedder = MarkerEmbedder;
    let mut data: Vec<(Mat<T>, String)> = Vec::new();
    for entry in entries {
        let mode = match entry.label {
            AffectLabel::Positive => SamplingMode::TrainPositive,
            AffectLabel::Neutral => SamplingMode::TrainNeutral,
            AffectLabel::Negative => continue,
        };
        let source = DirFrameSource::open(&entry.clip_id, &entry.frames_dir, cfg.frame_rate)
            .map_err(|e| e.for_clip(&entry.clip_id))?;
        let mut rng = ChaCha8Rng::seed_from_u64(clip_seed(cfg.seed, &entry.clip_id));
        for frame in
            sample_frames(&source, mode).map_err(|e| e.for_clip(&entry.clip_id))?
        {
            for face in detect_faces(&frame, &detector).map_err(|e| e.for_clip(&entry.clip_id))? {
                let Some(face) = face.clamped(frame.image.rows(), frame.image.cols()) else {
                    continue;
                };
                let crop = Mat::from_fn(face.h, face.w, |r, c| {
                    frame.image.at(face.y + r, face.x + c)
                });
                let embedding = embedder_embed(&embedder, &crop)?;
                if match_gallery(&embedding, gallery)?.is_none() {
                    continue;
                }
                if let Some(net_input) =
                    prepare_face_crop(&frame.image, &face, CropMode::Train, &mut rng)
                {
                    data.push((net_input, entry.label.as_str().to_string()));
                }
            }
        }
    }
    let classes: std::collections::BTreeSet<&str> =
        data.iter().map(|(_, l)| l.as_str()).collect();
    if !classes.contains("neutral") || !classes.contains("positive") {
        return Err(Error::TrainingData(
            "stage 2 needs matched faces from both neutral and positive clips".into(),
        ));
    }
    fit_balanced(data, cfg)
}

fn embedder_embed<T: Real>(
    embedder: &MarkerEmbedder,
    crop: &Mat<T>,
) -> Result<crate::vision::FaceEmbedding<T>> {
    use crate::vision::FaceEmbedder;
    embedder.embed(crop)
}

/// Apply the configured imbalance strategy and train.
fn fit_balanced<T: Real>(data: Vec<(Mat<T>, String)>, cfg: &RunConfig) -> Result<LinearModel<T>> {
    let train_cfg = cfg.train_config();
    match cfg.balance {
        Balance::Weighted => {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for (_, label) in &data {
                *counts.entry(label.clone()).or_insert(0) += 1;
            }
            let class_weights = weighted_sampler(&counts)?;
            let weights: Vec<f64> = data.iter().map(|(_, l)| class_weights[l]).collect();
            train_linear(&data, &train_cfg, Some(&weights))
        }
        Balance::Downsample => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let reduced = downsample(&data, &mut rng);
            train_linear(&reduced, &train_cfg, None)
        }
    }
}

/// Train both stages from a manifest.
pub fn train_backends<T: Real>(
    entries: &[ManifestEntry],
    gallery: &FaceGallery<T>,
    cfg: &RunConfig,
) -> Result<TrainedBackends<T>> {
    let (ser, stats) = fit_stage1(entries, cfg)?;
    let fer = fit_stage2(entries, gallery, cfg)?;
    Ok(TrainedBackends { ser, stats, fer })
}

/// Assemble classification components around trained backends and the
/// synthetic marker detector/embedder.
pub fn marker_components<T: Real>(
    backends: &TrainedBackends<T>,
    gallery: FaceGallery<T>,
    cascade_cfg: CascadeConfig,
) -> Components<T> {
    Components {
        ser: Arc::new(backends.ser.clone()),
        fer: Arc::new(backends.fer.clone()),
        stats: backends.stats,
        gallery: Arc::new(gallery),
        detector_factory: Arc::new(|| Box::new(MarkerDetector)),
        embedder_factory: Arc::new(|| Box::new(MarkerEmbedder)),
        config: cascade_cfg,
    }
}

/// Classify every clip in a manifest.
///
/// Clip failures do not abort the batch: the error is recorded as a warning
/// with the clip id attached and the remaining clips continue. Returns rows
/// in manifest order plus stage-1 scores for ROC analysis
/// (`(score, is_truly_negative)` pairs at clip or segment level per config).
pub fn predict_manifest<T: Real>(
    entries: &[ManifestEntry],
    components: &Components<T>,
    cfg: &RunConfig,
    workers: usize,
) -> (Vec<PredictionRow>, Vec<(f64, bool)>, Vec<String>) {
    let results = run_indexed(entries, workers, |_, entry| {
        let run = || -> Result<(PredictionRow, Vec<(f64, bool)>)> {
            let audio = read_wav::<T>(&entry.audio_path).map_err(|e| e.for_clip(&entry.clip_id))?;
            let source = DirFrameSource::open(&entry.clip_id, &entry.frames_dir, cfg.frame_rate)
                .map_err(|e| e.for_clip(&entry.clip_id))?;
            let decision = classify_clip(&entry.clip_id, &audio, &source, components)?;
            let truly_negative = entry.label == AffectLabel::Negative;
            let scores = match cfg.stage1_auc {
                crate::config::AucLevel::Clip => {
                    vec![(decision.stage1_neg_ratio, truly_negative)]
                }
                crate::config::AucLevel::Segment => decision
                    .stage1_segment_neg_probs
                    .iter()
                    .map(|&p| (p, truly_negative))
                    .collect(),
            };
            Ok((
                PredictionRow::from_decision(&entry.participant_id, entry.label, &decision),
                scores,
            ))
        };
        run()
    });

    let mut rows = Vec::new();
    let mut stage1_scores = Vec::new();
    let mut warnings = Vec::new();
    for result in results {
        match result {
            Ok((row, scores)) => {
                rows.push(row);
                stage1_scores.extend(scores);
            }
            Err(e) => warnings.push(format!("clip skipped: {e}")),
        }
    }
    (rows, stage1_scores, warnings)
}
