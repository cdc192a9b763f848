//! ROC-AUC via the trapezoidal rule over the tie-grouped ROC curve.
//!
//! Equivalent to the rank (Mann-Whitney) formulation: the probability that a
//! random positive outscores a random negative, ties counted half.

use crate::error::{Error, Result};

/// Area under the ROC curve for `(score_for_positive_class, is_positive)`
/// pairs. Both classes must be present.
pub fn roc_auc(scored: &[(f64, bool)]) -> Result<f64> {
    let positives = scored.iter().filter(|(_, y)| *y).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Metric(
            "ROC-AUC needs both classes present".into(),
        ));
    }
    if scored.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite("ROC score".into()));
    }

    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut area = 0.0f64;
    let (mut tp, mut fp) = (0u64, 0u64);
    let (mut prev_tp, mut prev_fp) = (0u64, 0u64);
    let mut i = 0usize;
    while i < sorted.len() {
        // Consume the whole tie group at this score.
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // Trapezoid between the previous and current ROC point.
        area += (fp - prev_fp) as f64 * (tp + prev_tp) as f64 / 2.0;
        prev_tp = tp;
        prev_fp = fp;
    }
    Ok(area / (positives as f64 * negatives as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) pairwise oracle: P(pos > neg) + 0.5 P(pos == neg).
    fn pairwise_oracle(scored: &[(f64, bool)]) -> f64 {
        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for &(sp, yp) in scored.iter().filter(|(_, y)| *y) {
            let _ = yp;
            for &(sn, yn) in scored.iter().filter(|(_, y)| !*y) {
                let _ = yn;
                pairs += 1.0;
                if sp > sn {
                    wins += 1.0;
                } else if sp == sn {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfectly_separated_is_one() {
        let scored = vec![(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        assert_eq!(roc_auc(&scored).unwrap(), 1.0);
    }

    #[test]
    fn all_ties_is_half() {
        let scored = vec![(0.5, true), (0.5, false), (0.5, true), (0.5, false)];
        assert!((roc_auc(&scored).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_error() {
        assert!(roc_auc(&[(0.5, true), (0.7, true)]).is_err());
        assert!(roc_auc(&[]).is_err());
    }

    #[test]
    fn matches_pairwise_oracle_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let n = rng.gen_range(2..200);
            let mut scored: Vec<(f64, bool)> = (0..n)
                .map(|_| {
                    // Coarse grid forces plenty of ties.
                    let s = (rng.gen_range(0.0..1.0f64) * 10.0).round() / 10.0;
                    (s, rng.gen_bool(0.4))
                })
                .collect();
            // Ensure both classes.
            scored.push((rng.gen_range(0.0..1.0), true));
            scored.push((rng.gen_range(0.0..1.0), false));
            let fast = roc_auc(&scored).unwrap();
            let slow = pairwise_oracle(&scored);
            assert!(
                (fast - slow).abs() < 1e-9,
                "trapezoid {fast} vs pairwise {slow}"
            );
        }
    }

    #[test]
    fn complement_symmetry_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut used = std::collections::BTreeSet::new();
        let scored: Vec<(f64, bool)> = (0..50)
            .map(|i| {
                let mut s;
                loop {
                    s = rng.gen_range(0.0..1.0f64);
                    let key = (s * 1e12) as u64;
                    if used.insert(key) {
                        break;
                    }
                }
                (s, i % 2 == 0)
            })
            .collect();
        let auc = roc_auc(&scored).unwrap();
        let flipped: Vec<(f64, bool)> = scored.iter().map(|&(s, y)| (-s, y)).collect();
        let auc_flipped = roc_auc(&flipped).unwrap();
        assert!((auc + auc_flipped - 1.0).abs() < 1e-12);
    }
}
