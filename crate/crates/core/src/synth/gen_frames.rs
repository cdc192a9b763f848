//! Frame generation: child face markers with expression patches, plus
//! occasional distractor faces.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cascade::AffectLabel;
use crate::mat::Mat;
use crate::real::Real;
use crate::synth::CorpusSpec;
use crate::vision::FaceBox;
use crate::vision::marker::{
    identity_code, render_marker, MarkerExpression, MARKER_SIZE,
};

/// First identity-code index reserved for distractor faces.
const DISTRACTOR_CODE_BASE: usize = 8;

/// Ground truth for one planted face.
#[derive(Debug, Clone)]
pub struct PlantedFace {
    pub face: FaceBox,
    /// Gallery identity for children, `other` for distractors.
    pub identity: String,
    pub expression: MarkerExpression,
}

/// Generate `n_frames` frames for one clip.
///
/// Every frame contains the participant's child face; the expression patch
/// follows the clip label (bright for Positive, dim otherwise) except with
/// probability `label_noise`. A distractor face with a non-gallery identity
/// code appears in `distractor_rate` of frames. Returns the frames and the
/// per-frame planted ground truth.
pub fn gen_frames<T: Real>(
    label: AffectLabel,
    n_frames: usize,
    participant_index: usize,
    spec: &CorpusSpec,
    rng: &mut ChaCha8Rng,
) -> (Vec<Mat<T>>, Vec<Vec<PlantedFace>>) {
    assert!(n_frames >= 1);
    let (rows, cols) = (spec.frame_rows, spec.frame_cols);
    let child_code = identity_code(participant_index);

    let mut frames = Vec::with_capacity(n_frames);
    let mut truth = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        let mut image: Mat<T> =
            Mat::from_fn(rows, cols, |_, _| T::from_f64_c(rng.gen_range(0.0..0.2)));
        let mut planted = Vec::with_capacity(2);

        let child_pos = random_position(rows, cols, rng);
        let clip_expression = match label {
            AffectLabel::Positive => MarkerExpression::Positive,
            _ => MarkerExpression::Neutral,
        };
        let expression = if spec.label_noise > 0.0 && rng.gen_bool(spec.label_noise) {
            flip(clip_expression)
        } else {
            clip_expression
        };
        let noise_amp = spec.embed_noise;
        render_marker(&mut image, child_pos.0, child_pos.1, &child_code, expression, || {
            if noise_amp > 0.0 {
                rng.gen_range(-noise_amp..noise_amp)
            } else {
                0.0
            }
        });
        planted.push(PlantedFace {
            face: face_box(child_pos),
            identity: CorpusSpec::child_identity(participant_index),
            expression,
        });

        if spec.distractor_rate > 0.0 && rng.gen_bool(spec.distractor_rate) {
            if let Some(pos) = disjoint_position(rows, cols, child_pos, rng) {
                let code = identity_code(DISTRACTOR_CODE_BASE + rng.gen_range(0..7));
                let expression = if rng.gen_bool(0.5) {
                    MarkerExpression::Positive
                } else {
                    MarkerExpression::Neutral
                };
                render_marker(&mut image, pos.0, pos.1, &code, expression, || {
                    if noise_amp > 0.0 {
                        rng.gen_range(-noise_amp..noise_amp)
                    } else {
                        0.0
                    }
                });
                planted.push(PlantedFace {
                    face: face_box(pos),
                    identity: "other".to_string(),
                    expression,
                });
            }
        }

        frames.push(image);
        truth.push(planted);
    }
    (frames, truth)
}

fn flip(e: MarkerExpression) -> MarkerExpression {
    match e {
        MarkerExpression::Neutral => MarkerExpression::Positive,
        MarkerExpression::Positive => MarkerExpression::Neutral,
    }
}

fn face_box((y, x): (usize, usize)) -> FaceBox {
    FaceBox {
        x,
        y,
        w: MARKER_SIZE,
        h: MARKER_SIZE,
        confidence: 1.0,
    }
}

fn random_position(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> (usize, usize) {
    (
        rng.gen_range(1..rows - MARKER_SIZE),
        rng.gen_range(1..cols - MARKER_SIZE),
    )
}

/// A position whose marker (with a 1 px halo) does not touch the child's.
fn disjoint_position(
    rows: usize,
    cols: usize,
    other: (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Option<(usize, usize)> {
    let gap = MARKER_SIZE + 1;
    for _ in 0..50 {
        let pos = random_position(rows, cols, rng);
        let dy = pos.0.abs_diff(other.0);
        let dx = pos.1.abs_diff(other.1);
        if dy >= gap || dx >= gap {
            return Some(pos);
        }
    }
    None
}
