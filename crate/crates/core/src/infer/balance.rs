//! Class-imbalance handling: inverse-frequency weighting and downsampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Per-sample weights that make the expected class draw uniform.
///
/// A sample of class `c` gets weight `1 / (count_c * n_classes)`, so
/// `count_c * weight_c` is the same for every class and the weights of all
/// samples sum to 1.
pub fn weighted_sampler(class_counts: &BTreeMap<String, usize>) -> Result<BTreeMap<String, f64>> {
    if class_counts.is_empty() {
        return Err(Error::TrainingData("no classes to weight".into()));
    }
    let n_classes = class_counts.len() as f64;
    let mut weights = BTreeMap::new();
    for (label, &count) in class_counts {
        if count == 0 {
            return Err(Error::TrainingData(format!("class {label} has zero samples")));
        }
        weights.insert(label.clone(), 1.0 / (count as f64 * n_classes));
    }
    Ok(weights)
}

/// Draws sample indices proportional to their weights.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    cumulative: Vec<f64>,
}

impl WeightedSampler {
    pub fn new(sample_weights: &[f64]) -> Result<Self> {
        if sample_weights.is_empty() {
            return Err(Error::TrainingData("no samples to draw from".into()));
        }
        if sample_weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::NonFinite("sampler weight".into()));
        }
        let mut cumulative = Vec::with_capacity(sample_weights.len());
        let mut acc = 0.0;
        for &w in sample_weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(WeightedSampler { cumulative })
    }

    /// Draw one index with probability proportional to its weight.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        use rand::Rng;
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Reduce every class to the minority-class count by uniform seeded
/// sampling without replacement; the minority class is untouched and the
/// original ordering of the surviving samples is preserved.
pub fn downsample<X: Clone>(
    data: &[(X, String)],
    rng: &mut ChaCha8Rng,
) -> Vec<(X, String)> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (_, label)) in data.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    let Some(min_count) = by_class.values().map(|v| v.len()).min() else {
        return Vec::new();
    };
    let mut selected: Vec<usize> = Vec::new();
    for indices in by_class.values() {
        if indices.len() == min_count {
            selected.extend_from_slice(indices);
        } else {
            let mut pool = indices.clone();
            pool.shuffle(rng);
            pool.truncate(min_count);
            selected.extend(pool);
        }
    }
    selected.sort_unstable();
    selected.into_iter().map(|i| data[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn counts(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn paper_scale_imbalance_weights() {
        let w = weighted_sampler(&counts(&[("neg", 134), ("non-neg", 9834)])).unwrap();
        let ratio = w["neg"] / w["non-neg"];
        assert!((ratio - 9834.0 / 134.0).abs() < 1e-9);
        // Expected class draw is uniform: count * weight equal across classes.
        let a = 134.0 * w["neg"];
        let b = 9834.0 * w["non-neg"];
        assert!((a - b).abs() < 1e-12);
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn balanced_counts_equal_weights() {
        let w = weighted_sampler(&counts(&[("a", 10), ("b", 10)])).unwrap();
        assert_eq!(w["a"], w["b"]);
    }

    #[test]
    fn zero_count_is_an_error() {
        assert!(weighted_sampler(&counts(&[("a", 0), ("b", 5)])).is_err());
    }

    #[test]
    fn class_expectation_uniform_for_any_counts() {
        for counts_case in [vec![("x", 1), ("y", 999)], vec![("a", 7), ("b", 13), ("c", 2)]] {
            let cmap = counts(&counts_case);
            let w = weighted_sampler(&cmap).unwrap();
            let expectations: Vec<f64> =
                cmap.iter().map(|(label, &n)| n as f64 * w[label]).collect();
            for e in &expectations {
                assert!((e - expectations[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn downsample_paper_counts() {
        let mut data: Vec<((), String)> = Vec::new();
        data.extend((0..134).map(|_| ((), "neg".to_string())));
        data.extend((0..9834).map(|_| ((), "non-neg".to_string())));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = downsample(&data, &mut rng);
        let negs = out.iter().filter(|(_, l)| l == "neg").count();
        let nons = out.iter().filter(|(_, l)| l == "non-neg").count();
        assert_eq!(negs, 134);
        assert_eq!(nons, 134);
    }

    #[test]
    fn balanced_input_is_identity() {
        let data: Vec<(usize, String)> = (0..10)
            .map(|i| (i, if i % 2 == 0 { "a" } else { "b" }.to_string()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = downsample(&data, &mut rng);
        assert_eq!(out, data);
    }

    #[test]
    fn downsample_deterministic_under_seed() {
        let data: Vec<(usize, String)> = (0..100)
            .map(|i| (i, if i < 10 { "rare" } else { "common" }.to_string()))
            .collect();
        let a = downsample(&data, &mut ChaCha8Rng::seed_from_u64(9));
        let b = downsample(&data, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|(_, l)| l == "common").count(), 10);
    }

    #[test]
    fn weighted_draws_hit_analytic_frequency() {
        let cmap = counts(&[("neg", 134), ("non-neg", 9834)]);
        let w = weighted_sampler(&cmap).unwrap();
        let labels: Vec<&str> = std::iter::repeat("neg")
            .take(134)
            .chain(std::iter::repeat("non-neg").take(9834))
            .collect();
        let per_sample: Vec<f64> = labels.iter().map(|l| w[*l]).collect();
        let sampler = WeightedSampler::new(&per_sample).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let draws = 100_000;
        let mut neg = 0usize;
        for _ in 0..draws {
            if labels[sampler.draw(&mut rng)] == "neg" {
                neg += 1;
            }
        }
        let freq = neg as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.01, "negative frequency {freq}");
    }
}
