//! Rank-based AUC.

use crate::error::{Error, Result};

/// Mann-Whitney AUC with ties counted half.
///
/// Sorts once and assigns average ranks within tie groups, so it matches the
/// all-pairs definition exactly while staying O(n log n).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidConfig(
            "scores and labels must have equal length".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidConfig("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::OneClassOnly);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // rank sum of positives, averaging ranks across tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j share the average
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&idx| labels[idx]).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        i = j;
    }

    let n_pos = n_pos as f64;
    let auc = (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64);
    Ok(auc)
}

/// Macro one-vs-rest AUC for more than two classes: per-class AUC of that
/// class's probability column, averaged over classes present on both sides.
/// Binary data ordinarily goes through [`roc_auc`] directly; this is an
/// extension beyond the binary benchmarks.
pub fn macro_ovr_auc(proba: &[Vec<f64>], label_indices: &[usize], n_classes: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for class in 0..n_classes {
        let labels: Vec<bool> = label_indices.iter().map(|&y| y == class).collect();
        let scores: Vec<f64> = proba.iter().map(|p| p[class]).collect();
        match roc_auc(&scores, &labels) {
            Ok(auc) => {
                total += auc;
                counted += 1;
            }
            Err(Error::OneClassOnly) => continue,
            Err(e) => return Err(e),
        }
    }
    if counted == 0 {
        return Err(Error::OneClassOnly);
    }
    Ok(total / counted as f64)
}
