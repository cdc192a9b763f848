//! Synthetic face markers: the rendering convention shared by the corpus
//! generator, the marker detector, and the marker embedder.
//!
//! A marker is a 20x20 square with a 2-pixel bright ring. The interior splits
//! into an identity band (a 4x4 grid of cells encoding a Walsh-Hadamard code
//! word as two intensity levels) and an expression band (a uniform patch
//! whose brightness carries the planted expression). Hadamard code words are
//! mutually orthogonal, so markers for different identities embed at cosine
//! distance ~1 while re-renders of the same identity stay within noise.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;
use crate::vision::detect::{FaceBox, FaceDetector};
use crate::vision::embedding::{FaceEmbedder, FaceEmbedding, EMBED_DIM};

/// Marker side length in pixels.
pub const MARKER_SIZE: usize = 20;
/// Ring thickness in pixels.
const RING: usize = 2;
/// Ring intensity as rendered.
const RING_LEVEL: f64 = 1.0;
/// Detection threshold separating ring pixels from everything else.
const BRIGHT: f64 = 0.9;
/// Identity-cell intensity for a +1 code bit.
const CELL_HI: f64 = 0.55;
/// Identity-cell intensity for a -1 code bit.
const CELL_LO: f64 = 0.30;
/// Expression-band intensity for a planted positive expression.
pub const EXPR_POSITIVE: f64 = 0.80;
/// Expression-band intensity for a planted neutral expression.
pub const EXPR_NEUTRAL: f64 = 0.35;
/// Number of usable identity codes (Hadamard rows excluding the trivial one).
pub const MAX_IDENTITIES: usize = 15;

const GRID: usize = 4;
const INTERIOR: usize = MARKER_SIZE - 2 * RING; // 16
const CELL_W: usize = INTERIOR / GRID; // 4
const BAND_ROWS: usize = INTERIOR / 2; // 8
const CELL_H: usize = BAND_ROWS / GRID; // 2

/// Walsh-Hadamard code word (+-1 per cell) for an identity index.
///
/// Row 0 of the Hadamard matrix is all ones and is skipped; indices are
/// taken modulo [`MAX_IDENTITIES`].
pub fn identity_code(index: usize) -> [i8; 16] {
    let row = 1 + index % MAX_IDENTITIES;
    let mut code = [0i8; 16];
    for (col, slot) in code.iter_mut().enumerate() {
        // Sylvester construction: sign = (-1)^{popcount(row & col)}.
        *slot = if (row & col).count_ones() % 2 == 0 { 1 } else { -1 };
    }
    code
}

/// Planted expression carried by a marker's expression band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerExpression {
    Neutral,
    Positive,
}

impl MarkerExpression {
    fn level(self) -> f64 {
        match self {
            MarkerExpression::Neutral => EXPR_NEUTRAL,
            MarkerExpression::Positive => EXPR_POSITIVE,
        }
    }
}

/// Paint a marker into `image` with its top-left corner at `(y, x)`.
///
/// `cell_noise` perturbs identity-band pixels (pass 0 for a clean render);
/// the perturbation values come from the caller so all randomness stays
/// under the corpus seed.
pub fn render_marker<T: Real>(
    image: &mut Mat<T>,
    y: usize,
    x: usize,
    code: &[i8; 16],
    expression: MarkerExpression,
    mut cell_noise: impl FnMut() -> f64,
) {
    assert!(y + MARKER_SIZE <= image.rows() && x + MARKER_SIZE <= image.cols());
    for dy in 0..MARKER_SIZE {
        for dx in 0..MARKER_SIZE {
            let on_ring = dy < RING || dy >= MARKER_SIZE - RING || dx < RING || dx >= MARKER_SIZE - RING;
            let v = if on_ring {
                RING_LEVEL
            } else {
                let iy = dy - RING;
                let ix = dx - RING;
                if iy < BAND_ROWS {
                    let cell = (iy / CELL_H) * GRID + ix / CELL_W;
                    let base = if code[cell] > 0 { CELL_HI } else { CELL_LO };
                    (base + cell_noise()).clamp(0.0, BRIGHT - 0.05)
                } else {
                    expression.level()
                }
            };
            image.set(y + dy, x + dx, T::from_f64_c(v));
        }
    }
}

/// Ideal (noise-free) embedding for an identity code, as stored in galleries.
pub fn ideal_embedding<T: Real>(code: &[i8; 16]) -> FaceEmbedding<T> {
    let norm = (EMBED_DIM as f64).sqrt();
    let vector: Vec<T> = (0..EMBED_DIM)
        .map(|i| T::from_f64_c(code[i % 16] as f64 / norm))
        .collect();
    FaceEmbedding::new(vector).expect("code embeddings are unit vectors")
}

/// Detector that finds rendered markers by their bright rings.
#[derive(Debug, Clone, Default)]
pub struct MarkerDetector;

impl<T: Real> FaceDetector<T> for MarkerDetector {
    fn detect(&self, image: &Mat<T>) -> std::result::Result<Vec<FaceBox>, String> {
        let bright = |r: usize, c: usize| image.at(r, c).to_f64_c() >= BRIGHT;
        let mut boxes = Vec::new();
        if image.rows() < MARKER_SIZE || image.cols() < MARKER_SIZE {
            return Ok(boxes);
        }
        for y in 0..=image.rows() - MARKER_SIZE {
            'scan: for x in 0..=image.cols() - MARKER_SIZE {
                // Top-left ring corner: bright, with no bright pixel above or left.
                if !bright(y, x)
                    || (y > 0 && bright(y - 1, x))
                    || (x > 0 && bright(y, x - 1))
                {
                    continue;
                }
                // Verify the full ring.
                for d in 0..MARKER_SIZE {
                    for t in 0..RING {
                        if !bright(y + t, x + d)
                            || !bright(y + MARKER_SIZE - 1 - t, x + d)
                            || !bright(y + d, x + t)
                            || !bright(y + d, x + MARKER_SIZE - 1 - t)
                        {
                            continue 'scan;
                        }
                    }
                }
                // Interior must not be ring-bright (rejects solid blocks).
                if bright(y + RING, x + RING) {
                    continue;
                }
                let mut ring_sum = 0.0;
                let mut ring_n = 0usize;
                for d in 0..MARKER_SIZE {
                    ring_sum += image.at(y, x + d).to_f64_c() + image.at(y + d, x).to_f64_c();
                    ring_n += 2;
                }
                boxes.push(FaceBox {
                    x,
                    y,
                    w: MARKER_SIZE,
                    h: MARKER_SIZE,
                    confidence: (ring_sum / ring_n as f64).clamp(0.0, 1.0),
                });
            }
        }
        Ok(boxes)
    }
}

/// Embedder that reads the identity band of a marker crop.
#[derive(Debug, Clone, Default)]
pub struct MarkerEmbedder;

impl<T: Real> FaceEmbedder<T> for MarkerEmbedder {
    fn embed(&self, crop: &Mat<T>) -> Result<FaceEmbedding<T>> {
        if crop.is_empty() {
            return Err(Error::ZeroNorm);
        }
        let canon = if crop.shape() == (MARKER_SIZE, MARKER_SIZE) {
            crop.clone()
        } else {
            crop.resize_bilinear(MARKER_SIZE, MARKER_SIZE)
        };
        let mid = (CELL_HI + CELL_LO) / 2.0;
        let mut cells = [0.0f64; 16];
        for (cell, slot) in cells.iter_mut().enumerate() {
            let gy = cell / GRID;
            let gx = cell % GRID;
            let mut sum = 0.0;
            for iy in 0..CELL_H {
                for ix in 0..CELL_W {
                    let r = RING + gy * CELL_H + iy;
                    let c = RING + gx * CELL_W + ix;
                    sum += canon.at(r, c).to_f64_c();
                }
            }
            *slot = sum / (CELL_H * CELL_W) as f64 - mid;
        }
        let cell_norm = cells.iter().map(|v| v * v).sum::<f64>().sqrt();
        if cell_norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        // Tile the 16 cells to 128 dimensions (tiling preserves cosine
        // geometry) and scale to unit norm.
        let tiles = (EMBED_DIM / 16) as f64;
        let scale = 1.0 / (cell_norm * tiles.sqrt());
        let vector: Vec<T> = (0..EMBED_DIM)
            .map(|i| T::from_f64_c(cells[i % 16] * scale))
            .collect();
        FaceEmbedding::new(vector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::cosine_similarity;

    fn blank(rows: usize, cols: usize) -> Mat<f64> {
        Mat::filled(rows, cols, 0.1)
    }

    #[test]
    fn codes_are_orthogonal() {
        for i in 0..MAX_IDENTITIES {
            for j in 0..MAX_IDENTITIES {
                let dot: i32 = identity_code(i)
                    .iter()
                    .zip(identity_code(j).iter())
                    .map(|(&a, &b)| i32::from(a) * i32::from(b))
                    .sum();
                if i == j {
                    assert_eq!(dot, 16);
                } else {
                    assert_eq!(dot, 0, "codes {i} and {j} not orthogonal");
                }
            }
        }
    }

    #[test]
    fn single_marker_detected_exactly_once() {
        let mut img = blank(64, 64);
        render_marker(&mut img, 10, 22, &identity_code(0), MarkerExpression::Positive, || 0.0);
        let boxes = <MarkerDetector as FaceDetector<f64>>::detect(&MarkerDetector, &img).unwrap();
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        assert_eq!((b.y, b.x, b.w, b.h), (10, 22, MARKER_SIZE, MARKER_SIZE));
        assert!(b.confidence > 0.95);
    }

    #[test]
    fn blank_frame_detects_nothing() {
        let boxes = <MarkerDetector as FaceDetector<f64>>::detect(&MarkerDetector, &blank(64, 64)).unwrap();
        assert!(boxes.is_empty());
    }

    #[test]
    fn two_markers_detected() {
        let mut img = blank(64, 64);
        render_marker(&mut img, 2, 2, &identity_code(1), MarkerExpression::Neutral, || 0.0);
        render_marker(&mut img, 40, 30, &identity_code(2), MarkerExpression::Positive, || 0.0);
        let boxes = <MarkerDetector as FaceDetector<f64>>::detect(&MarkerDetector, &img).unwrap();
        assert_eq!(boxes.len(), 2);
    }

    #[test]
    fn clean_render_embeds_at_ideal_entry() {
        let mut img = blank(32, 32);
        render_marker(&mut img, 4, 4, &identity_code(3), MarkerExpression::Neutral, || 0.0);
        let crop = Mat::from_fn(MARKER_SIZE, MARKER_SIZE, |r, c| img.at(4 + r, 4 + c));
        let emb = <MarkerEmbedder as FaceEmbedder<f64>>::embed(&MarkerEmbedder, &crop).unwrap();
        let ideal: FaceEmbedding<f64> = ideal_embedding(&identity_code(3));
        let sim = cosine_similarity(&emb, &ideal).unwrap();
        assert!(1.0 - sim < 1e-9, "distance {} too large", 1.0 - sim);
    }

    #[test]
    fn different_identities_embed_far_apart() {
        let a: FaceEmbedding<f64> = ideal_embedding(&identity_code(0));
        let b: FaceEmbedding<f64> = ideal_embedding(&identity_code(7));
        let d = 1.0 - cosine_similarity(&a, &b).unwrap();
        assert!(d >= 0.8, "distance {d} below distractor margin");
    }

    #[test]
    fn expression_does_not_move_the_embedding() {
        let mut img_n = blank(32, 32);
        let mut img_p = blank(32, 32);
        render_marker(&mut img_n, 4, 4, &identity_code(2), MarkerExpression::Neutral, || 0.0);
        render_marker(&mut img_p, 4, 4, &identity_code(2), MarkerExpression::Positive, || 0.0);
        let crop = |img: &Mat<f64>| Mat::from_fn(MARKER_SIZE, MARKER_SIZE, |r, c| img.at(4 + r, 4 + c));
        let en = <MarkerEmbedder as FaceEmbedder<f64>>::embed(&MarkerEmbedder, &crop(&img_n)).unwrap();
        let ep = <MarkerEmbedder as FaceEmbedder<f64>>::embed(&MarkerEmbedder, &crop(&img_p)).unwrap();
        let sim = cosine_similarity(&en, &ep).unwrap();
        assert!(1.0 - sim < 1e-9);
    }

    #[test]
    fn noisy_render_stays_within_gallery_distance() {
        let mut img = blank(32, 32);
        let mut k = 0u64;
        render_marker(&mut img, 4, 4, &identity_code(1), MarkerExpression::Positive, || {
            k += 1;
            ((k * 2654435761 % 1000) as f64 / 1000.0 - 0.5) * 0.04
        });
        let crop = Mat::from_fn(MARKER_SIZE, MARKER_SIZE, |r, c| img.at(4 + r, 4 + c));
        let emb = <MarkerEmbedder as FaceEmbedder<f64>>::embed(&MarkerEmbedder, &crop).unwrap();
        let ideal: FaceEmbedding<f64> = ideal_embedding(&identity_code(1));
        let d = 1.0 - cosine_similarity(&emb, &ideal).unwrap();
        assert!(d < 0.1, "noisy embedding distance {d} exceeds 0.1");
    }
}
