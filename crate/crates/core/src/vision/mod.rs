//! Vision front-end: frame sampling, face detection plumbing, gallery
//! matching, and crop preparation for the expression classifier.

mod crop;
mod detect;
mod embedding;
mod gallery;
pub mod marker;
mod pgm;

pub use crop::{augment, prepare_face_crop, AugmentParams, CropMode};
pub use detect::{detect_faces, FaceBox, FaceDetector};
pub use embedding::{cosine_similarity, FaceEmbedding, FaceEmbedder, EMBED_DIM};
pub use gallery::{match_gallery, FaceGallery};
pub use pgm::{read_pgm, write_pgm};

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// One sampled video frame: grayscale intensities in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct FrameRef<T> {
    pub clip_id: String,
    pub frame_index: usize,
    pub image: Mat<T>,
}

/// Frame sampling policy.
///
/// Training samples positive clips at 3 FPS and neutral clips at 1 FPS to
/// even out their typical durations; testing takes every fifth frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    TrainPositive,
    TrainNeutral,
    Test,
}

/// Indices selected by a sampling mode over `frame_count` frames at `fps`.
pub fn sample_indices(frame_count: usize, fps: f64, mode: SamplingMode) -> Vec<usize> {
    let stride = match mode {
        SamplingMode::TrainPositive => (fps / 3.0).round().max(1.0) as usize,
        SamplingMode::TrainNeutral => fps.round().max(1.0) as usize,
        SamplingMode::Test => 5,
    };
    (0..frame_count).step_by(stride).collect()
}

/// Source of decoded frames for one clip.
pub trait FrameSource<T> {
    fn clip_id(&self) -> &str;
    fn frame_count(&self) -> usize;
    fn fps(&self) -> f64;
    fn frame(&self, index: usize) -> Result<Mat<T>>;
}

/// Load the frames selected by `mode` from a source.
pub fn sample_frames<T: Real>(
    source: &dyn FrameSource<T>,
    mode: SamplingMode,
) -> Result<Vec<FrameRef<T>>> {
    sample_indices(source.frame_count(), source.fps(), mode)
        .into_iter()
        .map(|i| {
            Ok(FrameRef {
                clip_id: source.clip_id().to_string(),
                frame_index: i,
                image: source.frame(i)?,
            })
        })
        .collect()
}

/// Directory of per-frame PGM files named by zero-padded frame number
/// (`000000.pgm`, `000001.pgm`, ...).
#[derive(Debug, Clone)]
pub struct DirFrameSource {
    clip_id: String,
    dir: PathBuf,
    frame_count: usize,
    fps: f64,
}

impl DirFrameSource {
    pub fn open(clip_id: &str, dir: &Path, fps: f64) -> Result<Self> {
        let mut count = 0usize;
        while dir.join(frame_file_name(count)).exists() {
            count += 1;
        }
        if count == 0 && !dir.is_dir() {
            return Err(Error::format(dir, "frame directory does not exist"));
        }
        Ok(DirFrameSource {
            clip_id: clip_id.to_string(),
            dir: dir.to_path_buf(),
            frame_count: count,
            fps,
        })
    }
}

/// Canonical file name for frame `index`.
pub fn frame_file_name(index: usize) -> String {
    format!("{index:06}.pgm")
}

impl<T: Real> FrameSource<T> for DirFrameSource {
    fn clip_id(&self) -> &str {
        &self.clip_id
    }

    fn frame_count(&self) -> usize {
        self.frame_count
    }

    fn fps(&self) -> f64 {
        self.fps
    }

    fn frame(&self, index: usize) -> Result<Mat<T>> {
        read_pgm(&self.dir.join(frame_file_name(index)))
    }
}

/// In-memory frame sequence, used by tests and the synthetic generator.
#[derive(Debug, Clone)]
pub struct MemFrameSource<T> {
    pub clip_id: String,
    pub frames: Vec<Mat<T>>,
    pub fps: f64,
}

impl<T: Real> FrameSource<T> for MemFrameSource<T> {
    fn clip_id(&self) -> &str {
        &self.clip_id
    }

    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn fps(&self) -> f64 {
        self.fps
    }

    fn frame(&self, index: usize) -> Result<Mat<T>> {
        self.frames
            .get(index)
            .cloned()
            .ok_or_else(|| Error::Detector {
                frame_index: index,
                reason: "frame index out of range".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_positive_30fps_10s() {
        let idx = sample_indices(300, 30.0, SamplingMode::TrainPositive);
        assert_eq!(idx.len(), 30);
        assert_eq!(idx[1] - idx[0], 10);
    }

    #[test]
    fn train_neutral_30fps_10s() {
        let idx = sample_indices(300, 30.0, SamplingMode::TrainNeutral);
        assert_eq!(idx.len(), 10);
    }

    #[test]
    fn test_mode_every_fifth_frame() {
        let idx = sample_indices(300, 30.0, SamplingMode::Test);
        assert_eq!(idx.len(), 60);
        assert_eq!(idx.first(), Some(&0));
        assert_eq!(idx.last(), Some(&295));
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(i, 5 * k);
        }
    }

    #[test]
    fn empty_clip_yields_no_indices() {
        for mode in [SamplingMode::TrainPositive, SamplingMode::TrainNeutral, SamplingMode::Test] {
            assert!(sample_indices(0, 30.0, mode).is_empty());
        }
    }

    #[test]
    fn low_fps_clamps_stride_to_one() {
        let idx = sample_indices(10, 2.0, SamplingMode::TrainPositive);
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
    }
}
