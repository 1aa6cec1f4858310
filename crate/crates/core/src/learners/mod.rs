//! In-repo learners over dense encoded matrices.
//!
//! All fit functions take `x` as row-major `Vec<Vec<f64>>` and `y` as class
//! indices. Nothing here knows about schemas; encoding happens upstream.

mod boost;
mod forest;
mod linear;
mod tree;

pub use boost::{BoostConfig, GradientBoostedTrees};
pub use forest::{ForestConfig, RandomForest};
pub use linear::{LogisticConfig, LogisticModel};
pub use tree::{ClassificationTree, TreeConfig};

pub(crate) fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

pub(crate) fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}
