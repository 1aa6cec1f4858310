//! Multinomial logistic regression: full-batch gradient descent for
//! downstream fits, and an SGD variant exposing per-epoch snapshots.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;

use super::softmax_in_place;

#[derive(Debug, Clone)]
pub struct LogisticConfig {
    pub l2: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the largest absolute gradient entry falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1e-3,
            learning_rate: 0.1,
            max_epochs: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    /// k rows of d feature weights plus a trailing bias.
    weights: Vec<Vec<f64>>,
    pub n_classes: usize,
}

impl LogisticModel {
    pub fn fit_gd(x: &[Vec<f64>], y: &[usize], n_classes: usize, config: &LogisticConfig) -> Self {
        let n = x.len();
        let d = x[0].len();
        let mut weights = vec![vec![0.0; d + 1]; n_classes];
        let mut grads = vec![vec![0.0; d + 1]; n_classes];
        for _ in 0..config.max_epochs {
            for row in &mut grads {
                row.iter_mut().for_each(|g| *g = 0.0);
            }
            for (xi, &yi) in x.iter().zip(y) {
                let p = scores(&weights, xi);
                for (c, grad_c) in grads.iter_mut().enumerate() {
                    let coeff = (p[c] - f64::from(u8::from(yi == c))) / n as f64;
                    for (g, v) in grad_c[..d].iter_mut().zip(xi) {
                        *g += coeff * v;
                    }
                    grad_c[d] += coeff;
                }
            }
            let mut max_abs: f64 = 0.0;
            for (w_c, grad_c) in weights.iter_mut().zip(&mut grads) {
                for j in 0..d {
                    grad_c[j] += config.l2 * w_c[j];
                }
                for (w, g) in w_c.iter_mut().zip(grad_c.iter()) {
                    *w -= config.learning_rate * g;
                    max_abs = max_abs.max(g.abs());
                }
            }
            if max_abs < config.tol {
                break;
            }
        }
        LogisticModel { weights, n_classes }
    }

    /// One pass per epoch in a seeded shuffled order, snapshotting the model
    /// after every epoch. Used as the cheap checkpointed dynamics source.
    pub fn fit_sgd_snapshots(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        n_epochs: usize,
        learning_rate: f64,
        l2: f64,
        rng: &mut ChaCha12Rng,
    ) -> Vec<LogisticModel> {
        let n = x.len();
        let d = x[0].len();
        let mut weights = vec![vec![0.0; d + 1]; n_classes];
        let mut order: Vec<usize> = (0..n).collect();
        let mut snapshots = Vec::with_capacity(n_epochs);
        for _ in 0..n_epochs {
            order.shuffle(rng);
            for &i in &order {
                let p = scores(&weights, &x[i]);
                for (c, w_c) in weights.iter_mut().enumerate() {
                    let coeff = p[c] - f64::from(u8::from(y[i] == c));
                    for (w, v) in w_c[..d].iter_mut().zip(&x[i]) {
                        *w -= learning_rate * (coeff * v + l2 * *w);
                    }
                    w_c[d] -= learning_rate * coeff;
                }
            }
            snapshots.push(LogisticModel {
                weights: weights.clone(),
                n_classes,
            });
        }
        snapshots
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        scores(&self.weights, row)
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .fold(0.0f64, |acc, w| acc.max(w.abs()))
    }
}

fn scores(weights: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
    let d = row.len();
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w_c| {
            w_c[..d]
                .iter()
                .zip(row)
                .map(|(w, v)| w * v)
                .sum::<f64>()
                + w_c[d]
        })
        .collect();
    softmax_in_place(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    fn separable() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..12 {
            let t = 0.1 * i as f64;
            x.push(vec![-1.0 - t, t]);
            y.push(0);
            x.push(vec![1.0 + t, -t]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn separates_toy_data() {
        let (x, y) = separable();
        let model = LogisticModel::fit_gd(&x, &y, 2, &LogisticConfig::default());
        for (row, &label) in x.iter().zip(&y) {
            let proba = model.predict_proba(row);
            assert!(proba[label] > 0.5);
        }
        assert!(model.max_abs_weight().is_finite());
    }

    #[test]
    fn probabilities_normalize() {
        let (x, y) = separable();
        let model = LogisticModel::fit_gd(&x, &y, 2, &LogisticConfig::default());
        let proba = model.predict_proba(&[0.3, 0.3]);
        assert!((proba.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sgd_snapshots_one_per_epoch_and_deterministic() {
        let (x, y) = separable();
        let mut rng1 = rng_for("sgd", 5);
        let snaps1 = LogisticModel::fit_sgd_snapshots(&x, &y, 2, 10, 0.1, 1e-4, &mut rng1);
        assert_eq!(snaps1.len(), 10);
        let mut rng2 = rng_for("sgd", 5);
        let snaps2 = LogisticModel::fit_sgd_snapshots(&x, &y, 2, 10, 0.1, 1e-4, &mut rng2);
        for (a, b) in snaps1.iter().zip(&snaps2) {
            assert_eq!(a.predict_proba(&x[0]), b.predict_proba(&x[0]));
        }
        // later snapshots should be at least as confident on separable data
        let early = snaps1[0].predict_proba(&x[0])[0];
        let late = snaps1[9].predict_proba(&x[0])[0];
        assert!(late >= early - 1e-9);
    }

    #[test]
    fn three_class_fit() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let t = 0.05 * i as f64;
            x.push(vec![0.0 + t]);
            y.push(0);
            x.push(vec![3.0 + t]);
            y.push(1);
            x.push(vec![6.0 + t]);
            y.push(2);
        }
        let model = LogisticModel::fit_gd(&x, &y, 3, &LogisticConfig::default());
        let proba = model.predict_proba(&[6.2]);
        let argmax = proba
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 2);
    }
}
