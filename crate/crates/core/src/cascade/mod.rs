//! The two-stage decision procedure: stage 1 filters Negative clips from
//! speech, stage 2 splits the remainder into Positive and Neutral by
//! majority vote over gallery-matched face predictions.

mod predictions;

pub use predictions::{read_predictions_csv, write_predictions_csv, PredictionRow};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{
    build_mel_filterbank, fit_norm_stats, log_mel, resize_bilinear, segment, spectral_gate,
    standardize, stft_power, trim_silence, AudioBuffer, LogMelSpectrogram, NormStats,
    SpectrogramMeta,
};
use crate::error::{Error, Result};
use crate::infer::Classifier;
use crate::real::Real;
use crate::vision::{
    detect_faces, match_gallery, prepare_face_crop, CropMode, FaceDetector, FaceEmbedder,
    FaceGallery, FrameRef, FrameSource,
};

/// The three affect states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AffectLabel {
    Negative,
    Neutral,
    Positive,
}

impl AffectLabel {
    pub const ALL: [AffectLabel; 3] = [AffectLabel::Negative, AffectLabel::Neutral, AffectLabel::Positive];

    pub fn as_str(self) -> &'static str {
        match self {
            AffectLabel::Negative => "negative",
            AffectLabel::Neutral => "neutral",
            AffectLabel::Positive => "positive",
        }
    }

    /// Short code used in report tables (`neg_to_non-neg` style).
    pub fn short(self) -> &'static str {
        match self {
            AffectLabel::Negative => "neg",
            AffectLabel::Neutral => "neu",
            AffectLabel::Positive => "pos",
        }
    }

    pub fn parse(s: &str) -> Result<AffectLabel> {
        match s {
            "negative" => Ok(AffectLabel::Negative),
            "neutral" => Ok(AffectLabel::Neutral),
            "positive" => Ok(AffectLabel::Positive),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }

    /// Collapse to the stage-1 binary task.
    pub fn stage1(self) -> Stage1Label {
        match self {
            AffectLabel::Negative => Stage1Label::Negative,
            _ => Stage1Label::NonNegative,
        }
    }
}

impl std::fmt::Display for AffectLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stage-1 binary label; NonNegative covers Neutral and Positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage1Label {
    Negative,
    NonNegative,
}

impl Stage1Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage1Label::Negative => "negative",
            Stage1Label::NonNegative => "non-negative",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Stage1Label::Negative => "neg",
            Stage1Label::NonNegative => "non-neg",
        }
    }
}

/// How segment predictions aggregate into a clip-level stage-1 decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage1Rule {
    /// Negative iff the fraction of Negative segments >= threshold.
    Ratio,
    /// Negative iff any segment is Negative.
    Any,
    /// Negative iff the mean Negative probability >= threshold.
    Mean,
}

impl Stage1Rule {
    pub fn parse(s: &str) -> Result<Stage1Rule> {
        match s {
            "ratio" => Ok(Stage1Rule::Ratio),
            "any" => Ok(Stage1Rule::Any),
            "mean" => Ok(Stage1Rule::Mean),
            other => Err(Error::Config(format!("unknown stage1_rule {other}"))),
        }
    }
}

/// Which representation feeds the stage-1 classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage1Input {
    /// Raw standardized log-Mel (native backend default).
    Mel,
    /// Standardized log-Mel resized to `resize x resize` (CNN adapters).
    Resized,
}

impl Stage1Input {
    pub fn parse(s: &str) -> Result<Stage1Input> {
        match s {
            "mel" => Ok(Stage1Input::Mel),
            "resized" => Ok(Stage1Input::Resized),
            other => Err(Error::Config(format!("unknown stage1_input {other}"))),
        }
    }
}

/// Pipeline parameters for classification (a validated view of the run
/// configuration).
#[derive(Debug, Clone)]
pub struct CascadeConfig {
    pub seg_seconds: f64,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub mel_floor: f64,
    pub resize: usize,
    pub stage1_input: Stage1Input,
    pub trim_gate_db: f64,
    pub trim_min_silence_ms: f64,
    pub noise_reduction_db: f64,
    pub stage1_rule: Stage1Rule,
    pub stage1_threshold: f64,
    pub stage2_every_n_frames: usize,
    pub stage2_threshold: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            seg_seconds: 3.0,
            n_fft: 2048,
            hop: 512,
            n_mels: 64,
            mel_floor: 1e-10,
            resize: 224,
            stage1_input: Stage1Input::Mel,
            trim_gate_db: -40.0,
            trim_min_silence_ms: 500.0,
            noise_reduction_db: 10.0,
            stage1_rule: Stage1Rule::Ratio,
            stage1_threshold: 0.5,
            stage2_every_n_frames: 5,
            stage2_threshold: 0.5,
        }
    }
}

/// Clean a clip's audio and extract one log-Mel spectrogram per 3 s segment
/// (not yet standardized).
pub fn extract_logmels<T: Real>(
    clip_id: &str,
    audio: &AudioBuffer<T>,
    cfg: &CascadeConfig,
) -> Result<Vec<LogMelSpectrogram<T>>> {
    let trimmed = trim_silence(audio, cfg.trim_gate_db, cfg.trim_min_silence_ms);
    let gated = spectral_gate(&trimmed, cfg.noise_reduction_db);
    let fb = build_mel_filterbank(cfg.n_mels, cfg.n_fft, audio.sample_rate_hz, 0.0, audio.sample_rate_hz as f64 / 2.0)?;
    segment(&gated, cfg.seg_seconds)?
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let power = stft_power(seg, cfg.n_fft, cfg.hop)?;
            log_mel(
                &power,
                &fb,
                cfg.mel_floor,
                SpectrogramMeta {
                    segment_id: format!("{clip_id}#{i}"),
                    n_fft: cfg.n_fft,
                    hop: cfg.hop,
                },
            )
        })
        .collect()
}

/// Stage-1 result with per-segment provenance.
#[derive(Debug, Clone)]
pub struct Stage1Outcome {
    pub label: Stage1Label,
    /// Fraction of segments whose argmax was Negative.
    pub neg_ratio: f64,
    /// Per-segment probability of the Negative class.
    pub segment_neg_probs: Vec<f64>,
    /// Audio was digitally silent after trimming.
    pub silent: bool,
}

/// Classify a clip's audio as Negative vs NonNegative.
///
/// Fully silent audio short-circuits to NonNegative with a warning flag and
/// a zero ratio.
pub fn stage1_classify<T: Real>(
    clip_audio: &AudioBuffer<T>,
    ser: &dyn Classifier<T>,
    stats: &NormStats,
    cfg: &CascadeConfig,
) -> Result<Stage1Outcome> {
    expect_classes(ser, &[Stage1Label::Negative.as_str(), Stage1Label::NonNegative.as_str()])?;

    let trimmed = trim_silence(clip_audio, cfg.trim_gate_db, cfg.trim_min_silence_ms);
    if trimmed.is_digital_silence() {
        return Ok(Stage1Outcome {
            label: Stage1Label::NonNegative,
            neg_ratio: 0.0,
            segment_neg_probs: Vec::new(),
            silent: true,
        });
    }
    let gated = spectral_gate(&trimmed, cfg.noise_reduction_db);
    let fb = build_mel_filterbank(
        cfg.n_mels,
        cfg.n_fft,
        clip_audio.sample_rate_hz,
        0.0,
        clip_audio.sample_rate_hz as f64 / 2.0,
    )?;

    let mut neg_votes = 0usize;
    let mut segment_neg_probs = Vec::new();
    let segments = segment(&gated, cfg.seg_seconds)?;
    for (i, seg) in segments.iter().enumerate() {
        let power = stft_power(seg, cfg.n_fft, cfg.hop)?;
        let lm = log_mel(
            &power,
            &fb,
            cfg.mel_floor,
            SpectrogramMeta {
                segment_id: format!("#{i}"),
                n_fft: cfg.n_fft,
                hop: cfg.hop,
            },
        )?;
        let lm = standardize(&lm, stats);
        let features = match cfg.stage1_input {
            Stage1Input::Mel => lm.values,
            Stage1Input::Resized => resize_bilinear(&lm.values, cfg.resize, cfg.resize),
        };
        let scores = ser.predict_scores(&features)?;
        let p_neg = scores
            .prob(Stage1Label::Negative.as_str())
            .expect("class set validated")
            .to_f64_c();
        segment_neg_probs.push(p_neg);
        if scores.argmax() == Stage1Label::Negative.as_str() {
            neg_votes += 1;
        }
    }

    let neg_ratio = neg_votes as f64 / segments.len() as f64;
    let negative = match cfg.stage1_rule {
        Stage1Rule::Ratio => neg_ratio >= cfg.stage1_threshold,
        Stage1Rule::Any => neg_votes > 0,
        Stage1Rule::Mean => {
            let mean = segment_neg_probs.iter().sum::<f64>() / segment_neg_probs.len() as f64;
            mean >= cfg.stage1_threshold
        }
    };
    Ok(Stage1Outcome {
        label: if negative { Stage1Label::Negative } else { Stage1Label::NonNegative },
        neg_ratio,
        segment_neg_probs,
        silent: false,
    })
}

/// Valid votes collected for one clip in stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTally {
    /// Per-face predictions (Neutral or Positive only).
    pub votes: Vec<AffectLabel>,
    /// Fraction of Positive votes; 0 when there are no votes.
    pub pos_ratio: f64,
    pub threshold: f64,
}

/// The ratio rule at the heart of the stage-2 vote: Positive iff
/// `pos_ratio >= threshold` (the boundary decides Positive).
pub fn decide_votes(votes: &[AffectLabel], threshold: f64) -> (AffectLabel, f64) {
    debug_assert!(votes.iter().all(|v| *v != AffectLabel::Negative));
    if votes.is_empty() {
        return (AffectLabel::Neutral, 0.0);
    }
    let positives = votes.iter().filter(|v| **v == AffectLabel::Positive).count();
    let pos_ratio = positives as f64 / votes.len() as f64;
    let label = if pos_ratio >= threshold {
        AffectLabel::Positive
    } else {
        AffectLabel::Neutral
    };
    (label, pos_ratio)
}

/// Stage-2 result.
#[derive(Debug, Clone)]
pub struct Stage2Outcome {
    pub label: AffectLabel,
    pub tally: VoteTally,
    /// Sampled frames that produced no valid vote.
    pub discarded_frames: usize,
    /// No frame in the whole clip produced a valid vote.
    pub no_votes: bool,
}

/// Classify a non-negative clip as Positive vs Neutral from its frames.
///
/// Every `stage2_every_n_frames`-th frame is processed; each detected face
/// is embedded and matched against the gallery, and only matched faces vote.
/// Frames without any matched face are discarded. Zero valid votes over the
/// whole clip defaults to Neutral with the `no_votes` flag set.
pub fn stage2_classify<T: Real>(
    frames: &dyn FrameSource<T>,
    detector: &dyn FaceDetector<T>,
    embedder: &dyn FaceEmbedder<T>,
    gallery: &FaceGallery<T>,
    fer: &dyn Classifier<T>,
    cfg: &CascadeConfig,
) -> Result<Stage2Outcome> {
    expect_classes(fer, &[AffectLabel::Neutral.as_str(), AffectLabel::Positive.as_str()])?;
    if gallery.is_empty() {
        return Err(Error::Gallery("stage 2 requires a non-empty gallery".into()));
    }

    // Test-time crops draw nothing from the generator, but the crop API is
    // seeded uniformly.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut votes = Vec::new();
    let mut discarded_frames = 0usize;

    for index in (0..frames.frame_count()).step_by(cfg.stage2_every_n_frames.max(1)) {
        let image = frames.frame(index)?;
        let frame = FrameRef {
            clip_id: frames.clip_id().to_string(),
            frame_index: index,
            image,
        };
        let boxes = detect_faces(&frame, detector)?;
        let mut frame_votes = 0usize;
        for face in &boxes {
            let Some(face) = face.clamped(frame.image.rows(), frame.image.cols()) else {
                continue;
            };
            let crop = crate::mat::Mat::from_fn(face.h, face.w, |r, c| {
                frame.image.at(face.y + r, face.x + c)
            });
            let embedding = embedder.embed(&crop)?;
            if match_gallery(&embedding, gallery)?.is_none() {
                continue; // unmatched face: not a target child
            }
            let Some(net_input) = prepare_face_crop(&frame.image, &face, CropMode::Test, &mut rng)
            else {
                continue;
            };
            let scores = fer.predict_scores(&net_input)?;
            let vote = AffectLabel::parse(scores.argmax())?;
            votes.push(vote);
            frame_votes += 1;
        }
        if frame_votes == 0 {
            discarded_frames += 1;
        }
    }

    let no_votes = votes.is_empty();
    let (label, pos_ratio) = decide_votes(&votes, cfg.stage2_threshold);
    Ok(Stage2Outcome {
        label,
        tally: VoteTally {
            votes,
            pos_ratio,
            threshold: cfg.stage2_threshold,
        },
        discarded_frames,
        no_votes,
    })
}

/// Everything needed to classify clips.
pub struct Components<T: Real> {
    pub ser: Arc<dyn Classifier<T>>,
    pub fer: Arc<dyn Classifier<T>>,
    pub stats: NormStats,
    pub gallery: Arc<FaceGallery<T>>,
    /// Detector instances are requested per worker through this factory.
    pub detector_factory: Arc<dyn Fn() -> Box<dyn FaceDetector<T>> + Send + Sync>,
    /// Embedder instances are requested per worker through this factory.
    pub embedder_factory: Arc<dyn Fn() -> Box<dyn FaceEmbedder<T>> + Send + Sync>,
    pub config: CascadeConfig,
}

impl<T: Real> Clone for Components<T> {
    fn clone(&self) -> Self {
        Components {
            ser: Arc::clone(&self.ser),
            fer: Arc::clone(&self.fer),
            stats: self.stats,
            gallery: Arc::clone(&self.gallery),
            detector_factory: Arc::clone(&self.detector_factory),
            embedder_factory: Arc::clone(&self.embedder_factory),
            config: self.config.clone(),
        }
    }
}

/// Full provenance for one classified clip.
#[derive(Debug, Clone)]
pub struct ClipDecision {
    pub clip_id: String,
    pub label: AffectLabel,
    pub stage1_neg_ratio: f64,
    /// Present iff stage 1 passed the clip on (cascade exclusivity).
    pub stage2_tally: Option<VoteTally>,
    pub discarded_frames: usize,
    /// Diagnostic flags: `silent_audio`, `no_votes`.
    pub flags: Vec<String>,
    /// Per-segment Negative probabilities (segment-level AUC provenance).
    pub stage1_segment_neg_probs: Vec<f64>,
}

/// Run the cascade on one clip. Stage 1 short-circuits Negative clips;
/// otherwise stage 2 decides Positive vs Neutral.
pub fn classify_clip<T: Real>(
    clip_id: &str,
    audio: &AudioBuffer<T>,
    frames: &dyn FrameSource<T>,
    comp: &Components<T>,
) -> Result<ClipDecision> {
    classify_clip_inner(clip_id, audio, frames, comp).map_err(|e| e.for_clip(clip_id))
}

fn classify_clip_inner<T: Real>(
    clip_id: &str,
    audio: &AudioBuffer<T>,
    frames: &dyn FrameSource<T>,
    comp: &Components<T>,
) -> Result<ClipDecision> {
    let stage1 = stage1_classify(audio, comp.ser.as_ref(), &comp.stats, &comp.config)?;
    let mut flags = Vec::new();
    if stage1.silent {
        flags.push("silent_audio".to_string());
    }

    if stage1.label == Stage1Label::Negative {
        return Ok(ClipDecision {
            clip_id: clip_id.to_string(),
            label: AffectLabel::Negative,
            stage1_neg_ratio: stage1.neg_ratio,
            stage2_tally: None,
            discarded_frames: 0,
            flags,
            stage1_segment_neg_probs: stage1.segment_neg_probs,
        });
    }

    let detector = (comp.detector_factory)();
    let embedder = (comp.embedder_factory)();
    let stage2 = stage2_classify(
        frames,
        detector.as_ref(),
        embedder.as_ref(),
        &comp.gallery,
        comp.fer.as_ref(),
        &comp.config,
    )?;
    if stage2.no_votes {
        flags.push("no_votes".to_string());
    }
    Ok(ClipDecision {
        clip_id: clip_id.to_string(),
        label: stage2.label,
        stage1_neg_ratio: stage1.neg_ratio,
        stage2_tally: Some(stage2.tally),
        discarded_frames: stage2.discarded_frames,
        flags,
        stage1_segment_neg_probs: stage1.segment_neg_probs,
    })
}

fn expect_classes<T: Real>(classifier: &dyn Classifier<T>, expected: &[&str]) -> Result<()> {
    let mut have: Vec<&str> = classifier.class_labels().iter().map(|s| s.as_str()).collect();
    have.sort_unstable();
    let mut want = expected.to_vec();
    want.sort_unstable();
    if have != want {
        return Err(Error::UnknownLabel(format!(
            "classifier classes {have:?} do not match expected {want:?}"
        )));
    }
    Ok(())
}

/// Fit normalization stats for a stage-1 training corpus.
pub fn fit_stage1_stats<T: Real>(corpus: &[LogMelSpectrogram<T>]) -> Result<NormStats> {
    fit_norm_stats(corpus)
}
