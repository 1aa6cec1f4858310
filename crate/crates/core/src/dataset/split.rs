//! Class-balanced train/oracle/test splitting.

use rand::seq::SliceRandom;

use crate::dataset::{Dataset, Role};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: Dataset,
    pub oracle: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub n_train: usize,
}

/// Draws a class-balanced train set of `n_train` rows without replacement,
/// then shuffles the remaining rows and halves them into oracle and test.
///
/// Per-class train quotas are `n_train / k`, with the `n_train % k` leftover
/// slots given one each to the first classes in target-level order, so
/// per-class counts never differ by more than one. When the remainder is odd,
/// the oracle partition receives the smaller half.
pub fn make_splits(source: &Dataset, n_train: usize, seed: u64) -> Result<SplitResult> {
    let n = source.len();
    if n_train > n {
        return Err(Error::NTooLarge {
            n_train,
            n_rows: n,
        });
    }
    let k = source.schema.n_classes();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, row) in source.rows.iter().enumerate() {
        buckets[source.schema.level_index(&row.label)?].push(i);
    }

    let mut rng = rng_for("split", seed);
    let mut train_idx: Vec<usize> = Vec::with_capacity(n_train);
    let mut taken = vec![false; n];
    for (c, bucket) in buckets.iter_mut().enumerate() {
        let quota = n_train / k + usize::from(c < n_train % k);
        if bucket.len() < quota {
            return Err(Error::InsufficientClassSamples {
                class: source.schema.target.levels[c].clone(),
                got: bucket.len(),
                need: quota,
            });
        }
        bucket.shuffle(&mut rng);
        for &i in bucket.iter().take(quota) {
            taken[i] = true;
            train_idx.push(i);
        }
    }

    let mut remainder: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
    remainder.shuffle(&mut rng);
    let half = remainder.len() / 2;

    Ok(SplitResult {
        train: source.subset(&train_idx).with_role(Role::Train),
        oracle: source.subset(&remainder[..half]).with_role(Role::Oracle),
        test: source.subset(&remainder[half..]).with_role(Role::Test),
        seed,
        n_train,
    })
}
