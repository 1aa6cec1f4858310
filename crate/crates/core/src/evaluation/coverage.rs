//! k-NN hypersphere estimator of generative precision and recall.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, EncodeMode, EncodingStats, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PRResult {
    pub precision: f64,
    pub recall: f64,
    pub k: usize,
}

/// Precision: fraction of `syn` points falling inside the k-NN hypersphere
/// of at least one `reference` point (sphere radius = that point's distance
/// to its own k-th nearest neighbor within `reference`). Recall: the same
/// with the roles swapped, so `precision(a, b) == recall(b, a)` exactly.
///
/// Distances are Euclidean in the one-hot/standardized encoding fit on the
/// union of both datasets, making the estimate symmetric and scale-free.
pub fn precision_recall(syn: &Dataset, reference: &Dataset, k: usize) -> Result<PRResult> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    for data in [syn, reference] {
        if data.rows.len() < k + 1 {
            return Err(Error::TooFewRows { need: k + 1, got: data.rows.len() });
        }
    }
    let mut union = syn.concat(reference, Role::Merged)?;
    // canonical row order so the fitted statistics (and therefore the
    // result) are independent of which argument came first
    union.flip_audit = None;
    union.rows.sort_by_cached_key(|r| r.dedup_key());
    let stats = EncodingStats::fit(&union, EncodeMode::Linear)?;
    let syn_x: Vec<Vec<f64>> = syn.rows.iter().map(|r| stats.transform_row(r)).collect();
    let ref_x: Vec<Vec<f64>> = reference.rows.iter().map(|r| stats.transform_row(r)).collect();

    let precision = covered_fraction(&syn_x, &ref_x, k);
    let recall = covered_fraction(&ref_x, &syn_x, k);
    Ok(PRResult { precision, recall, k })
}

/// Fraction of `queries` lying within the k-NN radius of some `support`
/// point.
fn covered_fraction(queries: &[Vec<f64>], support: &[Vec<f64>], k: usize) -> f64 {
    let radii2: Vec<f64> = (0..support.len())
        .map(|i| kth_neighbor_dist2(support, i, k))
        .collect();
    let covered = queries
        .iter()
        .filter(|q| {
            support
                .iter()
                .zip(&radii2)
                .any(|(s, &r2)| dist2(q, s) <= r2)
        })
        .count();
    covered as f64 / queries.len() as f64
}

fn kth_neighbor_dist2(points: &[Vec<f64>], i: usize, k: usize) -> f64 {
    let mut dist: Vec<f64> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, p)| dist2(&points[i], p))
        .collect();
    dist.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    dist[k - 1]
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::numeric_dataset;
    use crate::rng::rng_for;
    use rand::Rng;

    fn uniform_square(n: usize, lo: f64, hi: f64, seed: u64) -> Dataset {
        let mut rng = rng_for("coverage-test", seed);
        let points: Vec<(Vec<f64>, &str)> = (0..n)
            .map(|i| {
                (
                    vec![rng.random_range(lo..hi), rng.random_range(lo..hi)],
                    if i % 2 == 0 { "0" } else { "1" },
                )
            })
            .collect();
        numeric_dataset(&points, Role::Synthetic)
    }

    #[test]
    fn identical_sets_cover_fully() {
        let data = uniform_square(100, 0.0, 1.0, 1);
        let result = precision_recall(&data, &data, 5).unwrap();
        assert_eq!(result.precision, 1.0);
        assert_eq!(result.recall, 1.0);
    }

    #[test]
    fn disjoint_clusters_cover_nothing() {
        let a = uniform_square(60, 0.0, 1.0, 2);
        let b = uniform_square(60, 100.0, 101.0, 3);
        let result = precision_recall(&a, &b, 5).unwrap();
        assert_eq!(result.precision, 0.0);
        assert_eq!(result.recall, 0.0);
    }

    #[test]
    fn symmetry_swaps_precision_and_recall() {
        let a = uniform_square(80, 0.0, 1.0, 4);
        let b = uniform_square(80, 0.5, 1.5, 5);
        let ab = precision_recall(&a, &b, 5).unwrap();
        let ba = precision_recall(&b, &a, 5).unwrap();
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
    }

    #[test]
    fn corner_quadrant_has_high_precision_quarter_recall() {
        let reference = uniform_square(2000, 0.0, 1.0, 6);
        let quadrant = uniform_square(2000, 0.0, 0.5, 7);
        let result = precision_recall(&quadrant, &reference, 5).unwrap();
        assert!(result.precision > 0.9, "precision {}", result.precision);
        assert!(
            (result.recall - 0.25).abs() < 0.1,
            "recall {}",
            result.recall
        );
    }

    #[test]
    fn too_few_rows_rejected() {
        let small = uniform_square(4, 0.0, 1.0, 8);
        let big = uniform_square(50, 0.0, 1.0, 9);
        assert!(matches!(
            precision_recall(&small, &big, 5),
            Err(Error::TooFewRows { need: 6, got: 4 })
        ));
    }
}
