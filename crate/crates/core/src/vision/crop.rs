//! Face crop preparation and training-time augmentation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mat::Mat;
use crate::real::Real;
use crate::vision::detect::FaceBox;

/// Network input side length.
const CROP_SIZE: usize = 44;
/// Offline resize side length; training crops 44x44 out of this.
const TRAIN_SIZE: usize = 48;

/// Whether a crop feeds training (resize to 48 then random 44 sub-crop) or
/// testing (resize straight to 44).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropMode {
    Train,
    Test,
}

/// Extract and size a face crop for the expression classifier.
///
/// Returns `None` when the box degenerates to nothing after clamping to the
/// image, which callers treat as a skip. Output values stay in `[0, 1]`.
pub fn prepare_face_crop<T: Real>(
    image: &Mat<T>,
    face: &FaceBox,
    mode: CropMode,
    rng: &mut ChaCha8Rng,
) -> Option<Mat<T>> {
    let face = face.clamped(image.rows(), image.cols())?;
    let region = Mat::from_fn(face.h, face.w, |r, c| image.at(face.y + r, face.x + c));
    Some(match mode {
        CropMode::Test => region.resize_bilinear(CROP_SIZE, CROP_SIZE),
        CropMode::Train => {
            let base = region.resize_bilinear(TRAIN_SIZE, TRAIN_SIZE);
            let dy = rng.gen_range(0..=TRAIN_SIZE - CROP_SIZE);
            let dx = rng.gen_range(0..=TRAIN_SIZE - CROP_SIZE);
            Mat::from_fn(CROP_SIZE, CROP_SIZE, |r, c| base.at(r + dy, c + dx))
        }
    })
}

/// Augmentation ranges; every draw is uniform and seeded.
#[derive(Debug, Clone, Copy)]
pub struct AugmentParams {
    /// Rotation drawn from `[-max_rotation_deg, +max_rotation_deg]`.
    pub max_rotation_deg: f64,
    /// Shift per axis drawn from `[-max_shift_px, +max_shift_px]`.
    pub max_shift_px: f64,
    /// Multiplicative illumination scale range.
    pub illumination: (f64, f64),
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            max_rotation_deg: 10.0,
            max_shift_px: 3.0,
            illumination: (0.8, 1.2),
        }
    }
}

/// Randomly rotate, shift, and relight a face, then center-crop to 44x44.
///
/// Sampling outside the source clamps to the nearest edge pixel; intensities
/// are clamped to `[0, 1]` after scaling. Deterministic for a fixed seed.
pub fn augment<T: Real>(face: &Mat<T>, rng: &mut ChaCha8Rng, params: &AugmentParams) -> Mat<T> {
    debug_assert!(face.rows() >= CROP_SIZE && face.cols() >= CROP_SIZE);

    let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> f64 {
        if hi > lo {
            rng.gen_range(lo..=hi)
        } else {
            lo
        }
    };
    let theta = draw(rng, -params.max_rotation_deg, params.max_rotation_deg).to_radians();
    let shift_y = draw(rng, -params.max_shift_px, params.max_shift_px);
    let shift_x = draw(rng, -params.max_shift_px, params.max_shift_px);
    let scale = T::from_f64_c(draw(rng, params.illumination.0, params.illumination.1));

    let (rows, cols) = face.shape();
    let cy = (rows - 1) as f64 / 2.0;
    let cx = (cols - 1) as f64 / 2.0;
    let (sin, cos) = theta.sin_cos();

    let sample = |y: f64, x: f64| -> T {
        let yc = y - cy;
        let xc = x - cx;
        // Inverse map: undo shift, then rotate backwards around the center.
        let ys = cos * (yc - shift_y) + sin * (xc - shift_x) + cy;
        let xs = -sin * (yc - shift_y) + cos * (xc - shift_x) + cx;
        bilinear_clamped(face, ys, xs)
    };

    let off_y = (rows - CROP_SIZE) / 2;
    let off_x = (cols - CROP_SIZE) / 2;
    Mat::from_fn(CROP_SIZE, CROP_SIZE, |r, c| {
        let v = sample((r + off_y) as f64, (c + off_x) as f64) * scale;
        v.max(T::zero()).min(T::one())
    })
}

fn bilinear_clamped<T: Real>(m: &Mat<T>, y: f64, x: f64) -> T {
    let y = y.clamp(0.0, (m.rows() - 1) as f64);
    let x = x.clamp(0.0, (m.cols() - 1) as f64);
    let y0 = y.floor() as usize;
    let x0 = x.floor() as usize;
    let y1 = (y0 + 1).min(m.rows() - 1);
    let x1 = (x0 + 1).min(m.cols() - 1);
    let fy = T::from_f64_c(y - y0 as f64);
    let fx = T::from_f64_c(x - x0 as f64);
    let one = T::one();
    m.at(y0, x0) * (one - fy) * (one - fx)
        + m.at(y0, x1) * (one - fy) * fx
        + m.at(y1, x0) * fy * (one - fx)
        + m.at(y1, x1) * fy * fx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn gradient(rows: usize, cols: usize) -> Mat<f64> {
        Mat::from_fn(rows, cols, |r, c| (r * cols + c) as f64 / (rows * cols) as f64)
    }

    #[test]
    fn test_mode_always_44x44() {
        let img = gradient(60, 80);
        let face = FaceBox { x: 5, y: 5, w: 30, h: 25, confidence: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let crop = prepare_face_crop(&img, &face, CropMode::Test, &mut rng).unwrap();
        assert_eq!(crop.shape(), (44, 44));
    }

    #[test]
    fn train_mode_deterministic_under_seed() {
        let img = gradient(60, 80);
        let face = FaceBox { x: 2, y: 8, w: 40, h: 40, confidence: 1.0 };
        let a = prepare_face_crop(&img, &face, CropMode::Train, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = prepare_face_crop(&img, &face, CropMode::Train, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shape(), (44, 44));
    }

    #[test]
    fn constant_region_stays_constant() {
        let img = Mat::filled(50, 50, 0.6f64);
        let face = FaceBox { x: 3, y: 3, w: 20, h: 20, confidence: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let crop = prepare_face_crop(&img, &face, CropMode::Train, &mut rng).unwrap();
        assert!(crop.as_slice().iter().all(|&v| (v - 0.6).abs() < 1e-12));
    }

    #[test]
    fn degenerate_box_is_skip() {
        let img = gradient(20, 20);
        let face = FaceBox { x: 25, y: 0, w: 5, h: 5, confidence: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(prepare_face_crop(&img, &face, CropMode::Test, &mut rng).is_none());
    }

    #[test]
    fn identity_params_center_crop_only() {
        let face = gradient(48, 48);
        let params = AugmentParams {
            max_rotation_deg: 0.0,
            max_shift_px: 0.0,
            illumination: (1.0, 1.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = augment(&face, &mut rng, &params);
        assert_eq!(out.shape(), (44, 44));
        for r in 0..44 {
            for c in 0..44 {
                assert!((out.at(r, c) - face.at(r + 2, c + 2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn illumination_scales_constant_image() {
        let face = Mat::filled(48, 48, 0.8f64);
        let params = AugmentParams {
            max_rotation_deg: 0.0,
            max_shift_px: 0.0,
            illumination: (0.5, 0.5),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = augment(&face, &mut rng, &params);
        assert!(out.as_slice().iter().all(|&v| (v - 0.4).abs() < 1e-12));
    }

    #[test]
    fn fixed_seed_bit_identical() {
        let face = gradient(48, 48);
        let params = AugmentParams::default();
        let a = augment(&face, &mut ChaCha8Rng::seed_from_u64(77), &params);
        let b = augment(&face, &mut ChaCha8Rng::seed_from_u64(77), &params);
        assert_eq!(a, b);
    }

    #[test]
    fn output_stays_in_unit_range() {
        let face = gradient(48, 48);
        let params = AugmentParams {
            max_rotation_deg: 25.0,
            max_shift_px: 6.0,
            illumination: (0.2, 3.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let out = augment(&face, &mut rng, &params);
            assert!(out.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
