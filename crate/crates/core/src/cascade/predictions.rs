//! Prediction CSV: one row per classified clip.
//!
//! Schema:
//! `clip_id,participant_id,true_label,pred_label,stage1_neg_ratio,stage2_votes,stage2_pos_ratio,discarded_frames,flags`
//!
//! Stage-2 columns are empty for clips stage 1 short-circuited; flags are
//! `;`-separated. Fields never contain commas, so no quoting is needed.

use crate::cascade::{AffectLabel, ClipDecision};
use crate::error::{Error, Result};

pub const PREDICTIONS_HEADER: &str = "clip_id,participant_id,true_label,pred_label,stage1_neg_ratio,stage2_votes,stage2_pos_ratio,discarded_frames,flags";

/// One labeled decision ready for evaluation.
#[derive(Debug, Clone)]
pub struct PredictionRow {
    pub clip_id: String,
    pub participant_id: String,
    pub true_label: AffectLabel,
    pub pred_label: AffectLabel,
    pub stage1_neg_ratio: f64,
    pub stage2_votes: Option<usize>,
    pub stage2_pos_ratio: Option<f64>,
    pub discarded_frames: usize,
    pub flags: Vec<String>,
}

impl PredictionRow {
    pub fn from_decision(participant_id: &str, true_label: AffectLabel, d: &ClipDecision) -> Self {
        PredictionRow {
            clip_id: d.clip_id.clone(),
            participant_id: participant_id.to_string(),
            true_label,
            pred_label: d.label,
            stage1_neg_ratio: d.stage1_neg_ratio,
            stage2_votes: d.stage2_tally.as_ref().map(|t| t.votes.len()),
            stage2_pos_ratio: d.stage2_tally.as_ref().map(|t| t.pos_ratio),
            discarded_frames: d.discarded_frames,
            flags: d.flags.clone(),
        }
    }
}

/// Render rows as CSV text, deterministically.
pub fn write_predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from(PREDICTIONS_HEADER);
    out.push('\n');
    for r in rows {
        let votes = r.stage2_votes.map_or(String::new(), |v| v.to_string());
        let ratio = r.stage2_pos_ratio.map_or(String::new(), |v| format!("{v:.6}"));
        out.push_str(&format!(
            "{},{},{},{},{:.6},{},{},{},{}\n",
            r.clip_id,
            r.participant_id,
            r.true_label,
            r.pred_label,
            r.stage1_neg_ratio,
            votes,
            ratio,
            r.discarded_frames,
            r.flags.join(";"),
        ));
    }
    out
}

/// Parse a predictions CSV (only the columns evaluation needs are strict).
pub fn read_predictions_csv(text: &str) -> Result<Vec<PredictionRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty predictions CSV".into()))?;
    if header.trim() != PREDICTIONS_HEADER {
        return Err(Error::Config(format!(
            "unexpected predictions header: {header}"
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Config(format!(
                "line {}: expected 9 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_opt_usize = |s: &str| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Config(format!("line {}: bad count {s}", lineno + 2)))
            }
        };
        let parse_opt_f64 = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Config(format!("line {}: bad ratio {s}", lineno + 2)))
            }
        };
        rows.push(PredictionRow {
            clip_id: fields[0].to_string(),
            participant_id: fields[1].to_string(),
            true_label: AffectLabel::parse(fields[2])?,
            pred_label: AffectLabel::parse(fields[3])?,
            stage1_neg_ratio: fields[4]
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad neg_ratio", lineno + 2)))?,
            stage2_votes: parse_opt_usize(fields[5])?,
            stage2_pos_ratio: parse_opt_f64(fields[6])?,
            discarded_frames: fields[7]
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad discarded_frames", lineno + 2)))?,
            flags: if fields[8].is_empty() {
                Vec::new()
            } else {
                fields[8].split(';').map(str::to_string).collect()
            },
        });
    }
    Ok(rows)
}
