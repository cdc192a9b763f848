//! Face detection interface.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;
use crate::vision::FrameRef;

/// Axis-aligned detection box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    /// Detector confidence in `[0, 1]`.
    pub confidence: f64,
}

impl FaceBox {
    /// Clamp to image bounds; `None` if nothing remains.
    pub fn clamped(&self, rows: usize, cols: usize) -> Option<FaceBox> {
        if self.x >= cols || self.y >= rows {
            return None;
        }
        let w = self.w.min(cols - self.x);
        let h = self.h.min(rows - self.y);
        if w == 0 || h == 0 {
            return None;
        }
        Some(FaceBox { w, h, ..*self })
    }
}

/// Pluggable face detector (a real MTCNN-style detector would sit behind
/// this; the crate ships a synthetic marker detector).
pub trait FaceDetector<T>: Send + Sync {
    /// Boxes for every face in the image, in any order.
    fn detect(&self, image: &Mat<T>) -> std::result::Result<Vec<FaceBox>, String>;
}

/// Run a detector on a frame, sorting boxes by descending confidence.
///
/// Detector failures are annotated with the frame index.
pub fn detect_faces<T: Real>(
    frame: &FrameRef<T>,
    detector: &dyn FaceDetector<T>,
) -> Result<Vec<FaceBox>> {
    let mut boxes = detector.detect(&frame.image).map_err(|reason| Error::Detector {
        frame_index: frame.frame_index,
        reason,
    })?;
    boxes.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });
    Ok(boxes)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct FixedBoxes(Vec<FaceBox>);

    impl FaceDetector<f64> for FixedBoxes {
        fn detect(&self, _image: &Mat<f64>) -> std::result::Result<Vec<FaceBox>, String> {
            Ok(self.0.clone())
        }
    }

    struct Failing;

    impl FaceDetector<f64> for Failing {
        fn detect(&self, _image: &Mat<f64>) -> std::result::Result<Vec<FaceBox>, String> {
            Err("sensor on fire".into())
        }
    }

    fn frame() -> FrameRef<f64> {
        FrameRef {
            clip_id: "c1".into(),
            frame_index: 7,
            image: Mat::zeros(8, 8),
        }
    }

    #[test]
    fn boxes_sorted_by_confidence() {
        let det = FixedBoxes(vec![
            FaceBox { x: 0, y: 0, w: 2, h: 2, confidence: 0.3 },
            FaceBox { x: 4, y: 4, w: 2, h: 2, confidence: 0.9 },
        ]);
        let boxes = detect_faces(&frame(), &det).unwrap();
        assert_eq!(boxes[0].confidence, 0.9);
        assert_eq!(boxes[1].confidence, 0.3);
    }

    #[test]
    fn failure_carries_frame_index() {
        let err = detect_faces(&frame(), &Failing).unwrap_err();
        match err {
            Error::Detector { frame_index, reason } => {
                assert_eq!(frame_index, 7);
                assert!(reason.contains("sensor"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn clamp_discards_degenerate_boxes() {
        let b = FaceBox { x: 10, y: 2, w: 4, h: 4, confidence: 1.0 };
        assert!(b.clamped(8, 8).is_none());
        let b = FaceBox { x: 6, y: 6, w: 4, h: 4, confidence: 1.0 };
        let c = b.clamped(8, 8).unwrap();
        assert_eq!((c.w, c.h), (2, 2));
    }
}
