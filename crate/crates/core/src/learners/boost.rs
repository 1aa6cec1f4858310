//! Gradient-boosted regression trees on logistic/softmax loss, with staged
//! (prefix-ensemble) probability predictions.
//!
//! Round r fits one tree per margin group to the loss gradients at the
//! current margins; leaf weights are the second-order Newton step
//! -G/(H+lambda) scaled by the learning rate. Binary targets use a single
//! margin group through a sigmoid; k>2 uses one group per class through a
//! softmax. The initial margins are the class prior log-odds, so a round
//! that finds no useful split leaves predictions at the prior exactly.

use super::{sigmoid, softmax_in_place};

#[derive(Debug, Clone)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub reg_lambda: f64,
    pub min_samples_leaf: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            reg_lambda: 1.0,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone)]
enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

#[derive(Debug, Clone)]
struct RegTree {
    nodes: Vec<RegNode>,
}

impl RegTree {
    fn fit(x: &[Vec<f64>], grad: &[f64], hess: &[f64], config: &BoostConfig) -> Self {
        let n = x.len();
        let d = x[0].len();
        let mut nodes = Vec::new();
        nodes.push(RegNode::Leaf { weight: 0.0 });
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, (0..n).collect(), 0)];

        while let Some((slot, idx, depth)) = stack.pop() {
            let g: f64 = idx.iter().map(|&i| grad[i]).sum();
            let h: f64 = idx.iter().map(|&i| hess[i]).sum();
            let split = if depth < config.max_depth && idx.len() >= 2 * config.min_samples_leaf {
                best_gain_split(x, grad, hess, &idx, g, h, d, config)
            } else {
                None
            };
            match split {
                Some((feature, threshold)) => {
                    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| x[i][feature] < threshold);
                    let left = nodes.len();
                    nodes.push(RegNode::Leaf { weight: 0.0 });
                    let right = nodes.len();
                    nodes.push(RegNode::Leaf { weight: 0.0 });
                    nodes[slot] = RegNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((left, left_idx, depth + 1));
                    stack.push((right, right_idx, depth + 1));
                }
                None => {
                    let weight = -config.learning_rate * g / (h + config.reg_lambda);
                    nodes[slot] = RegNode::Leaf { weight };
                }
            }
        }
        RegTree { nodes }
    }

    fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                RegNode::Leaf { weight } => return *weight,
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn best_gain_split(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    g_total: f64,
    h_total: f64,
    d: usize,
    config: &BoostConfig,
) -> Option<(usize, f64)> {
    let lambda = config.reg_lambda;
    let parent = g_total * g_total / (h_total + lambda);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted: Vec<usize> = Vec::with_capacity(indices.len());
    for feature in 0..d {
        sorted.clear();
        sorted.extend_from_slice(indices);
        sorted.sort_unstable_by(|&a, &b| {
            x[a][feature]
                .partial_cmp(&x[b][feature])
                .expect("finite feature values")
                .then(a.cmp(&b))
        });
        let mut gl = 0.0;
        let mut hl = 0.0;
        for pos in 1..sorted.len() {
            let moved = sorted[pos - 1];
            gl += grad[moved];
            hl += hess[moved];
            let prev = x[sorted[pos - 1]][feature];
            let next = x[sorted[pos]][feature];
            if next <= prev {
                continue;
            }
            if pos < config.min_samples_leaf || sorted.len() - pos < config.min_samples_leaf {
                continue;
            }
            let gr = g_total - gl;
            let hr = h_total - hl;
            let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
            if gain > 1e-12 && best.map(|(g, _, _)| gain > g + 1e-12).unwrap_or(true) {
                let mid = (prev + next) / 2.0;
                let threshold = if mid > prev { mid } else { next };
                best = Some((gain, feature, threshold));
            }
        }
    }
    best.map(|(_, feature, threshold)| (feature, threshold))
}

#[derive(Debug, Clone)]
pub struct GradientBoostedTrees {
    pub n_classes: usize,
    /// 1 margin group for binary targets, k groups otherwise.
    groups: usize,
    base: Vec<f64>,
    rounds: Vec<Vec<RegTree>>,
}

impl GradientBoostedTrees {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, config: &BoostConfig) -> Self {
        assert!(!x.is_empty(), "boosting needs at least one row");
        let n = x.len();
        let mut counts = vec![0usize; n_classes];
        for &label in y {
            counts[label] += 1;
        }
        // Absent classes get a half-count so priors stay finite.
        let smoothed: Vec<f64> = counts
            .iter()
            .map(|&c| if c == 0 { 0.5 } else { c as f64 })
            .collect();

        let (groups, base) = if n_classes == 2 {
            (1, vec![(smoothed[1] / smoothed[0]).ln()])
        } else {
            let total: f64 = smoothed.iter().sum();
            (n_classes, smoothed.iter().map(|c| (c / total).ln()).collect())
        };

        let mut margins: Vec<Vec<f64>> = vec![base.clone(); n];
        let mut rounds = Vec::with_capacity(config.n_rounds);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];

        for _ in 0..config.n_rounds {
            let mut round_trees = Vec::with_capacity(groups);
            if groups == 1 {
                for i in 0..n {
                    let p = sigmoid(margins[i][0]);
                    grad[i] = p - if y[i] == 1 { 1.0 } else { 0.0 };
                    hess[i] = (p * (1.0 - p)).max(1e-16);
                }
                let tree = RegTree::fit(x, &grad, &hess, config);
                for (i, row) in x.iter().enumerate() {
                    margins[i][0] += tree.predict(row);
                }
                round_trees.push(tree);
            } else {
                let probas: Vec<Vec<f64>> = margins
                    .iter()
                    .map(|m| {
                        let mut p = m.clone();
                        softmax_in_place(&mut p);
                        p
                    })
                    .collect();
                for c in 0..groups {
                    for i in 0..n {
                        let p = probas[i][c];
                        grad[i] = p - if y[i] == c { 1.0 } else { 0.0 };
                        hess[i] = (p * (1.0 - p)).max(1e-16);
                    }
                    let tree = RegTree::fit(x, &grad, &hess, config);
                    for (i, row) in x.iter().enumerate() {
                        margins[i][c] += tree.predict(row);
                    }
                    round_trees.push(tree);
                }
            }
            rounds.push(round_trees);
        }

        GradientBoostedTrees {
            n_classes,
            groups,
            base,
            rounds,
        }
    }

    pub fn n_stages(&self) -> usize {
        self.rounds.len()
    }

    /// Probability vectors after each prefix of rounds: one row per stage.
    pub fn staged_proba(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut margins = self.base.clone();
        let mut out = Vec::with_capacity(self.rounds.len());
        for round in &self.rounds {
            for (c, tree) in round.iter().enumerate() {
                margins[c] += tree.predict(row);
            }
            out.push(self.proba_from_margins(&margins));
        }
        out
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut margins = self.base.clone();
        for round in &self.rounds {
            for (c, tree) in round.iter().enumerate() {
                margins[c] += tree.predict(row);
            }
        }
        self.proba_from_margins(&margins)
    }

    fn proba_from_margins(&self, margins: &[f64]) -> Vec<f64> {
        if self.groups == 1 {
            let p = sigmoid(margins[0]);
            vec![1.0 - p, p]
        } else {
            let mut p = margins.to_vec();
            softmax_in_place(&mut p);
            p
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            x.push(vec![-2.0 - 0.1 * i as f64, 0.3 * i as f64]);
            y.push(0);
            x.push(vec![2.0 + 0.1 * i as f64, -0.3 * i as f64]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let (x, y) = separable();
        let model = GradientBoostedTrees::fit(&x, &y, 2, &BoostConfig::default());
        for (row, &label) in x.iter().zip(&y) {
            let proba = model.predict_proba(row);
            let pred = usize::from(proba[1] >= 0.5);
            assert_eq!(pred, label);
        }
    }

    #[test]
    fn staged_proba_has_one_row_per_round_summing_to_one() {
        let (x, y) = separable();
        let config = BoostConfig {
            n_rounds: 7,
            ..BoostConfig::default()
        };
        let model = GradientBoostedTrees::fit(&x, &y, 2, &config);
        let staged = model.staged_proba(&x[0]);
        assert_eq!(staged.len(), 7);
        for stage in &staged {
            assert_eq!(stage.len(), 2);
            assert!((stage.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // last stage equals the full prediction
        let full = model.predict_proba(&x[0]);
        assert_eq!(staged[6], full);
    }

    #[test]
    fn constant_features_predict_prior_at_every_stage() {
        let x: Vec<Vec<f64>> = (0..10).map(|_| vec![3.0, 3.0]).collect();
        let y: Vec<usize> = (0..10).map(|i| usize::from(i < 3)).collect();
        let model = GradientBoostedTrees::fit(&x, &y, 2, &BoostConfig::default());
        let staged = model.staged_proba(&[3.0, 3.0]);
        for stage in &staged {
            assert!((stage[1] - 0.3).abs() < 1e-12);
            assert!((stage[0] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn multiclass_probabilities_normalize_and_learn() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..8 {
            let t = i as f64 * 0.1;
            x.push(vec![0.0 + t, 0.0]);
            y.push(0);
            x.push(vec![5.0 + t, 0.0]);
            y.push(1);
            x.push(vec![10.0 + t, 0.0]);
            y.push(2);
        }
        let model = GradientBoostedTrees::fit(&x, &y, 3, &BoostConfig::default());
        for (row, &label) in x.iter().zip(&y) {
            let proba = model.predict_proba(row);
            assert!((proba.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let argmax = proba
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, label);
        }
    }

    #[test]
    fn deterministic_fit() {
        let (x, y) = separable();
        let a = GradientBoostedTrees::fit(&x, &y, 2, &BoostConfig::default());
        let b = GradientBoostedTrees::fit(&x, &y, 2, &BoostConfig::default());
        assert_eq!(a.predict_proba(&x[3]), b.predict_proba(&x[3]));
        assert_eq!(a.staged_proba(&x[5]), b.staged_proba(&x[5]));
    }
}
