//! Random forest: bagged Gini trees with per-split feature subsampling.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::tree::{ClassificationTree, TreeConfig};

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<ClassificationTree>,
    pub n_classes: usize,
}

impl RandomForest {
    /// Trees are built sequentially from the provided generator: bootstrap
    /// resample of n rows, sqrt(d) features per split.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        config: &ForestConfig,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let n = x.len();
        let d = x[0].len();
        let mtry = (d as f64).sqrt().ceil() as usize;
        let tree_config = TreeConfig {
            max_depth: config.max_depth,
            min_samples_leaf: config.min_samples_leaf,
            mtry: Some(mtry.clamp(1, d)),
        };
        let trees = (0..config.n_trees)
            .map(|_| {
                let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                ClassificationTree::fit(x, y, &indices, n_classes, &tree_config, rng)
            })
            .collect();
        RandomForest { trees, n_classes }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict_proba(row)) {
                *a += p;
            }
        }
        let m = self.trees.len() as f64;
        for a in &mut acc {
            *a /= m;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    fn separable() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..15 {
            x.push(vec![-1.0 - 0.05 * i as f64, i as f64]);
            y.push(0);
            x.push(vec![1.0 + 0.05 * i as f64, i as f64]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn separable_data_classified_correctly() {
        let (x, y) = separable();
        let mut rng = rng_for("forest", 0);
        let forest = RandomForest::fit(&x, &y, 2, &ForestConfig::default(), &mut rng);
        for (row, &label) in x.iter().zip(&y) {
            let proba = forest.predict_proba(row);
            assert!(proba[label] > 0.5, "row {row:?} proba {proba:?}");
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (x, y) = separable();
        let mut rng = rng_for("forest", 1);
        let forest = RandomForest::fit(&x, &y, 2, &ForestConfig::default(), &mut rng);
        let proba = forest.predict_proba(&[0.0, 0.0]);
        assert!((proba.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = separable();
        let mut rng1 = rng_for("forest", 7);
        let mut rng2 = rng_for("forest", 7);
        let a = RandomForest::fit(&x, &y, 2, &ForestConfig::default(), &mut rng1);
        let b = RandomForest::fit(&x, &y, 2, &ForestConfig::default(), &mut rng2);
        assert_eq!(a.predict_proba(&[0.2, 1.0]), b.predict_proba(&[0.2, 1.0]));
    }
}
