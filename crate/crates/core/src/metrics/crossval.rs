//! Grouped cross-validation over a corpus manifest.

use std::collections::BTreeSet;
use std::path::Path;

use crate::cascade::{AffectLabel, PredictionRow, Stage1Label};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::manifest::ManifestEntry;
use crate::metrics::{
    confusion_matrix, per_participant_report, roc_auc, summarize, ConfusionMatrix, FoldSpec,
    MetricsReport, TransitionRow,
};
use crate::par::run_indexed;
use crate::real::Real;
use crate::train::{marker_components, predict_manifest, train_backends};
use crate::vision::FaceGallery;

/// Cross-validation settings beyond the run configuration.
#[derive(Debug, Clone)]
pub struct CrossvalOptions {
    pub k: usize,
    /// Participant sets merged into single groups before folding.
    pub merge: Vec<BTreeSet<String>>,
    pub workers: usize,
}

impl Default for CrossvalOptions {
    fn default() -> Self {
        CrossvalOptions {
            k: 5,
            merge: Vec::new(),
            workers: 1,
        }
    }
}

/// One fold's evaluation.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: FoldSpec,
    /// Reason the fold was skipped (training class missing), if it was.
    pub skipped: Option<String>,
    pub rows: Vec<PredictionRow>,
    pub metrics: Option<MetricsReport>,
}

/// Aggregated cross-validation results.
#[derive(Debug, Clone)]
pub struct CvReport {
    pub folds: Vec<FoldOutcome>,
    /// Pooled 3-class matrix over all evaluated clips.
    pub pooled_confusion: ConfusionMatrix,
    pub pooled_metrics: MetricsReport,
    /// Stage-1 binary view (negative vs non-negative) with ROC-AUC.
    pub stage1_confusion: ConfusionMatrix,
    pub stage1_metrics: MetricsReport,
    /// Stage-2 binary view over truly non-negative clips that reached it.
    pub stage2_confusion: Option<ConfusionMatrix>,
    pub stage2_metrics: Option<MetricsReport>,
    pub per_participant: Vec<TransitionRow>,
    pub warnings: Vec<String>,
}

/// Run the full grouped cross-validation protocol: per fold, train native
/// backends on the training groups and evaluate held-out clips through the
/// whole cascade.
///
/// Folds whose training split lacks a class are skipped with a warning and
/// recorded in the report.
pub fn run_crossval<T: Real>(
    entries: &[ManifestEntry],
    cfg: &RunConfig,
    gallery_path: &Path,
    opts: &CrossvalOptions,
) -> Result<CvReport> {
    if entries.is_empty() {
        return Err(Error::Config("manifest has no clips".into()));
    }
    let participants: Vec<&str> = entries.iter().map(|e| e.participant_id.as_str()).collect();
    let folds = crate::metrics::make_folds(&participants, opts.k, &opts.merge)?;
    let gallery: FaceGallery<T> = FaceGallery::load(gallery_path, cfg.gallery_threshold)?;

    let outcomes: Vec<Result<(FoldOutcome, Vec<(f64, bool)>, Vec<String>)>> =
        run_indexed(&folds, opts.workers, |_, fold| {
            run_fold::<T>(entries, cfg, &gallery, fold)
        });

    let mut fold_outcomes = Vec::new();
    let mut warnings = Vec::new();
    let mut stage1_scores: Vec<(f64, bool)> = Vec::new();
    for outcome in outcomes {
        let (fold_outcome, scores, fold_warnings) = outcome?;
        if let Some(reason) = &fold_outcome.skipped {
            warnings.push(format!("fold {} skipped: {reason}", fold_outcome.fold.fold_id));
        }
        warnings.extend(fold_warnings);
        stage1_scores.extend(scores);
        fold_outcomes.push(fold_outcome);
    }

    let all_rows: Vec<&PredictionRow> =
        fold_outcomes.iter().flat_map(|f| f.rows.iter()).collect();
    if all_rows.is_empty() {
        return Err(Error::TrainingData(
            "every fold was skipped; nothing to evaluate".into(),
        ));
    }

    let three_class: Vec<&str> = AffectLabel::ALL.iter().map(|l| l.as_str()).collect();
    let pairs: Vec<(&str, &str)> = all_rows
        .iter()
        .map(|r| (r.true_label.as_str(), r.pred_label.as_str()))
        .collect();
    let pooled_confusion = confusion_matrix(&pairs, &three_class)?;
    let pooled_metrics = summarize(&pooled_confusion, cfg.f1_average)?;

    let stage1_pairs: Vec<(&str, &str)> = all_rows
        .iter()
        .map(|r| (r.true_label.stage1().as_str(), r.pred_label.stage1().as_str()))
        .collect();
    let stage1_order = vec![Stage1Label::Negative.as_str(), Stage1Label::NonNegative.as_str()];
    let stage1_confusion = confusion_matrix(&stage1_pairs, &stage1_order)?;
    let mut stage1_metrics = summarize(&stage1_confusion, cfg.f1_average)?;
    stage1_metrics.roc_auc = roc_auc(&stage1_scores).ok();

    let stage2_pairs: Vec<(&str, &str)> = all_rows
        .iter()
        .filter(|r| r.true_label != AffectLabel::Negative && r.stage2_votes.is_some())
        .map(|r| (r.true_label.as_str(), r.pred_label.as_str()))
        .collect();
    let (stage2_confusion, stage2_metrics) = if stage2_pairs.is_empty() {
        (None, None)
    } else {
        let order = vec![AffectLabel::Neutral.as_str(), AffectLabel::Positive.as_str()];
        let cm = confusion_matrix(&stage2_pairs, &order)?;
        let metrics = summarize(&cm, cfg.f1_average)?;
        (Some(cm), Some(metrics))
    };

    let transitions: Vec<(&str, &str, &str)> = all_rows
        .iter()
        .map(|r| {
            (
                r.participant_id.as_str(),
                r.true_label.short(),
                r.pred_label.short(),
            )
        })
        .collect();
    let per_participant = per_participant_report(&transitions);

    Ok(CvReport {
        folds: fold_outcomes,
        pooled_confusion,
        pooled_metrics,
        stage1_confusion,
        stage1_metrics,
        stage2_confusion,
        stage2_metrics,
        per_participant,
        warnings,
    })
}

fn run_fold<T: Real>(
    entries: &[ManifestEntry],
    cfg: &RunConfig,
    gallery: &FaceGallery<T>,
    fold: &FoldSpec,
) -> Result<(FoldOutcome, Vec<(f64, bool)>, Vec<String>)> {
    let train: Vec<ManifestEntry> = entries
        .iter()
        .filter(|e| !fold.holds_out(&e.participant_id))
        .cloned()
        .collect();
    let test: Vec<ManifestEntry> = entries
        .iter()
        .filter(|e| fold.holds_out(&e.participant_id))
        .cloned()
        .collect();

    if let Some(missing) = missing_training_class(&train) {
        return Ok((
            FoldOutcome {
                fold: fold.clone(),
                skipped: Some(format!("training split lacks {missing} clips")),
                rows: Vec::new(),
                metrics: None,
            },
            Vec::new(),
            Vec::new(),
        ));
    }

    let backends = train_backends::<T>(&train, gallery, cfg)?;
    let components = marker_components(&backends, gallery.clone(), cfg.cascade_config());
    // Clips within a fold run serially; parallelism is across folds.
    let (rows, scores, warnings) = predict_manifest(&test, &components, cfg, 1);

    let metrics = if rows.is_empty() {
        None
    } else {
        let three_class: Vec<&str> = AffectLabel::ALL.iter().map(|l| l.as_str()).collect();
        let pairs: Vec<(&str, &str)> = rows
            .iter()
            .map(|r| (r.true_label.as_str(), r.pred_label.as_str()))
            .collect();
        Some(summarize(&confusion_matrix(&pairs, &three_class)?, cfg.f1_average)?)
    };

    Ok((
        FoldOutcome {
            fold: fold.clone(),
            skipped: None,
            rows,
            metrics,
        },
        scores,
        warnings,
    ))
}

fn missing_training_class(train: &[ManifestEntry]) -> Option<&'static str> {
    let has = |l: AffectLabel| train.iter().any(|e| e.label == l);
    if !has(AffectLabel::Negative) {
        Some("negative")
    } else if !has(AffectLabel::Neutral) {
        Some("neutral")
    } else if !has(AffectLabel::Positive) {
        Some("positive")
    } else {
        None
    }
}

impl CvReport {
    /// Machine-readable summary, one `key=value` per line.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let fmt_opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
        out.push_str(&format!("pooled_accuracy={:.6}\n", self.pooled_metrics.accuracy));
        out.push_str(&format!("pooled_f1={:.6}\n", self.pooled_metrics.f1));
        for (label, recall) in &self.pooled_metrics.per_class_recall {
            out.push_str(&format!("pooled_recall_{label}={}\n", fmt_opt(*recall)));
        }
        out.push_str(&format!("stage1_accuracy={:.6}\n", self.stage1_metrics.accuracy));
        out.push_str(&format!("stage1_f1={:.6}\n", self.stage1_metrics.f1));
        for (label, recall) in &self.stage1_metrics.per_class_recall {
            out.push_str(&format!("stage1_recall_{label}={}\n", fmt_opt(*recall)));
        }
        out.push_str(&format!("stage1_g_mean={}\n", fmt_opt(self.stage1_metrics.g_mean)));
        out.push_str(&format!("stage1_roc_auc={}\n", fmt_opt(self.stage1_metrics.roc_auc)));
        if let Some(m) = &self.stage2_metrics {
            out.push_str(&format!("stage2_accuracy={:.6}\n", m.accuracy));
            out.push_str(&format!("stage2_f1={:.6}\n", m.f1));
            for (label, recall) in &m.per_class_recall {
                out.push_str(&format!("stage2_recall_{label}={}\n", fmt_opt(*recall)));
            }
            out.push_str(&format!("stage2_g_mean={}\n", fmt_opt(m.g_mean)));
        }
        for f in &self.folds {
            match (&f.skipped, &f.metrics) {
                (Some(_), _) => {
                    out.push_str(&format!("fold{}_accuracy=skipped\n", f.fold.fold_id))
                }
                (None, Some(m)) => out.push_str(&format!(
                    "fold{}_accuracy={:.6}\n",
                    f.fold.fold_id, m.accuracy
                )),
                (None, None) => {}
            }
        }
        out.push_str(&format!("evaluated_clips={}\n", self.pooled_confusion.total()));
        out.push_str(&format!("warnings={}\n", self.warnings.len()));
        out
    }

    /// Pooled metrics as a two-column CSV.
    pub fn pooled_metrics_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let fmt_opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
        let mut push = |k: &str, v: String| out.push_str(&format!("{k},{v}\n"));
        push("pooled_accuracy", format!("{:.6}", self.pooled_metrics.accuracy));
        push("pooled_f1", format!("{:.6}", self.pooled_metrics.f1));
        for (label, recall) in &self.pooled_metrics.per_class_recall {
            push(&format!("pooled_recall_{label}"), fmt_opt(*recall));
        }
        push("stage1_accuracy", format!("{:.6}", self.stage1_metrics.accuracy));
        push("stage1_f1", format!("{:.6}", self.stage1_metrics.f1));
        push("stage1_g_mean", fmt_opt(self.stage1_metrics.g_mean));
        push("stage1_roc_auc", fmt_opt(self.stage1_metrics.roc_auc));
        if let Some(m) = &self.stage2_metrics {
            push("stage2_accuracy", format!("{:.6}", m.accuracy));
            push("stage2_f1", format!("{:.6}", m.f1));
            push("stage2_g_mean", fmt_opt(m.g_mean));
        }
        out
    }

    /// Per-fold metrics as CSV.
    pub fn per_fold_csv(&self) -> String {
        let mut out = String::from("fold_id,held_out,clips,accuracy,f1,status\n");
        for f in &self.folds {
            let held: Vec<&str> = f.fold.held_out_groups.iter().map(|s| s.as_str()).collect();
            match (&f.skipped, &f.metrics) {
                (Some(reason), _) => out.push_str(&format!(
                    "{},{},0,,,skipped: {}\n",
                    f.fold.fold_id,
                    held.join("+"),
                    reason
                )),
                (None, Some(m)) => out.push_str(&format!(
                    "{},{},{},{:.6},{:.6},ok\n",
                    f.fold.fold_id,
                    held.join("+"),
                    f.rows.len(),
                    m.accuracy,
                    m.f1
                )),
                (None, None) => {}
            }
        }
        out
    }
}
