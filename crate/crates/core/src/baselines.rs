//! Classical oversamplers used as comparison generators: nearest-neighbor
//! interpolation (SMOTE) and Gaussian kernel density resampling with Scott's
//! bandwidth rule.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, Role, Row};
use crate::error::{Error, Result};
use crate::rng::rng_for;
use crate::schema::FeatureKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub n_target: usize,
    pub seed: u64,
}

impl SmoteConfig {
    pub fn new(n_target: usize, seed: u64) -> SmoteConfig {
        SmoteConfig { k_neighbors: 5, n_target, seed }
    }
}

/// Squared distance over numeric features; categorical columns do not
/// contribute.
fn numeric_dist2(a: &Row, b: &Row) -> f64 {
    a.cells
        .iter()
        .zip(&b.cells)
        .filter_map(|(ca, cb)| Some((ca.as_numeric()?, cb.as_numeric()?)))
        .map(|(va, vb)| (va - vb) * (va - vb))
        .sum()
}

/// Interpolates between same-class neighbor pairs. Each output row picks a
/// class (weighted by class frequency), a base row uniformly within it, one
/// of the base's `k` nearest same-class neighbors, and a uniform mixing
/// weight. Numeric cells are interpolated; categorical cells and the label
/// come from the base row.
pub fn smote_generate(train: &Dataset, config: &SmoteConfig) -> Result<Dataset> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    if config.n_target == 0 {
        return Err(Error::InvalidConfig("n_target must be positive".into()));
    }
    if config.k_neighbors == 0 {
        return Err(Error::InvalidConfig("k_neighbors must be positive".into()));
    }

    let levels = &train.schema.target.levels;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); levels.len()];
    for (i, row) in train.rows.iter().enumerate() {
        let class = train.schema.level_index(&row.label)?;
        buckets[class].push(i);
    }
    for (class, bucket) in levels.iter().zip(&buckets) {
        if bucket.len() == 1 {
            return Err(Error::ClassTooSmall { class: class.clone(), got: 1, need: 2 });
        }
    }

    let present: Vec<usize> = (0..levels.len()).filter(|&c| !buckets[c].is_empty()).collect();
    let total: usize = present.iter().map(|&c| buckets[c].len()).sum();

    let mut rng = rng_for("smote", config.seed);
    let mut rows = Vec::with_capacity(config.n_target);
    for _ in 0..config.n_target {
        let mut pick = rng.random_range(0..total);
        let mut class = present[0];
        for &c in &present {
            if pick < buckets[c].len() {
                class = c;
                break;
            }
            pick -= buckets[c].len();
        }
        let bucket = &buckets[class];
        let base_idx = bucket[rng.random_range(0..bucket.len())];
        let base = &train.rows[base_idx];

        let mut others: Vec<(f64, usize)> = bucket
            .iter()
            .filter(|&&i| i != base_idx)
            .map(|&i| (numeric_dist2(base, &train.rows[i]), i))
            .collect();
        others.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let k_eff = config.k_neighbors.min(others.len());
        let (_, neighbor_idx) = others[rng.random_range(0..k_eff)];
        let neighbor = &train.rows[neighbor_idx];

        let lambda: f64 = rng.random_range(0.0..1.0);
        let cells = base
            .cells
            .iter()
            .zip(&neighbor.cells)
            .map(|(cb, cn)| match (cb, cn) {
                (Cell::Numeric(vb), Cell::Numeric(vn)) => Cell::Numeric(vb + lambda * (vn - vb)),
                _ => cb.clone(),
            })
            .collect();
        rows.push(Row::new(cells, base.label.clone()));
    }
    Dataset::new(train.schema.clone(), Role::Synthetic, rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdeConfig {
    pub n_target: usize,
    pub seed: u64,
}

/// Scott's rule per numeric feature: `sigma_j * n^(-1/(d+4))` with the
/// population standard deviation and `d` the number of numeric features.
/// Returned aligned to the feature list, categorical positions 0.
pub fn scott_bandwidths(train: &Dataset) -> Result<Vec<f64>> {
    let numeric: Vec<usize> = train
        .schema
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind == FeatureKind::Numeric)
        .map(|(j, _)| j)
        .collect();
    if numeric.is_empty() {
        return Err(Error::NoNumericFeatures);
    }
    let n = train.rows.len();
    if n < 2 {
        return Err(Error::TooFewRows { need: 2, got: n });
    }

    let d = numeric.len();
    let factor = (n as f64).powf(-1.0 / (d as f64 + 4.0));
    let mut bandwidths = vec![0.0; train.schema.features.len()];
    for &j in &numeric {
        let values: Vec<f64> = train
            .rows
            .iter()
            .map(|r| r.cells[j].as_numeric().expect("numeric column"))
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        bandwidths[j] = var.sqrt() * factor;
    }
    Ok(bandwidths)
}

/// Resamples train rows and jitters numeric cells with per-feature Gaussian
/// kernels. Categorical cells and labels are copied from the sampled row.
pub fn kde_generate(train: &Dataset, config: &KdeConfig) -> Result<Dataset> {
    if config.n_target == 0 {
        return Err(Error::InvalidConfig("n_target must be positive".into()));
    }
    let bandwidths = scott_bandwidths(train)?;
    let n = train.rows.len();

    let mut rng = rng_for("kde", config.seed);
    let mut rows = Vec::with_capacity(config.n_target);
    for _ in 0..config.n_target {
        let base = &train.rows[rng.random_range(0..n)];
        let cells = base
            .cells
            .iter()
            .zip(&bandwidths)
            .map(|(cell, &h)| match cell {
                Cell::Numeric(v) => {
                    let z: f64 = rng.sample(StandardNormal);
                    Cell::Numeric(v + h * z)
                }
                Cell::Categorical { .. } => cell.clone(),
            })
            .collect();
        rows.push(Row::new(cells, base.label.clone()));
    }
    Dataset::new(train.schema.clone(), Role::Synthetic, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::{mixed_row, mixed_schema, numeric_dataset};
    use crate::schema::{FeatureSpec, TabularSchema, TargetSpec};

    fn segment_train() -> Dataset {
        numeric_dataset(
            &[
                (vec![0.0, 0.0], "0"),
                (vec![2.0, 4.0], "0"),
                (vec![10.0, 10.0], "1"),
                (vec![11.0, 10.0], "1"),
                (vec![10.0, 11.0], "1"),
            ],
            Role::Train,
        )
    }

    #[test]
    fn smote_deterministic() {
        let train = segment_train();
        let config = SmoteConfig::new(50, 9);
        let a = smote_generate(&train, &config).unwrap();
        let b = smote_generate(&train, &config).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.role, Role::Synthetic);
    }

    #[test]
    fn smote_outputs_lie_on_neighbor_segments() {
        let train = segment_train();
        let generated = smote_generate(&train, &SmoteConfig::new(200, 4)).unwrap();
        for row in &generated.rows {
            let x = row.cells[0].as_numeric().unwrap();
            let y = row.cells[1].as_numeric().unwrap();
            if row.label == "0" {
                // only one pair in class 0: the segment (0,0)-(2,4)
                let lambda = x / 2.0;
                assert!((0.0..=1.0).contains(&lambda));
                assert!((y - 4.0 * lambda).abs() < 1e-12, "off segment: ({x}, {y})");
            } else {
                assert!((9.9..=11.1).contains(&x) && (9.9..=11.1).contains(&y));
            }
        }
    }

    #[test]
    fn smote_respects_class_frequencies() {
        let train = segment_train();
        let generated = smote_generate(&train, &SmoteConfig::new(4000, 13)).unwrap();
        let zeros = generated.rows.iter().filter(|r| r.label == "0").count();
        let share = zeros as f64 / 4000.0;
        assert!((share - 0.4).abs() < 0.04, "class 0 share {share}");
    }

    #[test]
    fn smote_singleton_class_rejected() {
        let train = numeric_dataset(
            &[(vec![0.0], "0"), (vec![1.0], "0"), (vec![5.0], "1")],
            Role::Train,
        );
        match smote_generate(&train, &SmoteConfig::new(10, 0)) {
            Err(Error::ClassTooSmall { class, got, need }) => {
                assert_eq!(class, "1");
                assert_eq!((got, need), (1, 2));
            }
            other => panic!("expected class-too-small, got {other:?}"),
        }
    }

    #[test]
    fn smote_copies_categoricals_from_base() {
        let train = Dataset::new(
            mixed_schema(),
            Role::Train,
            vec![
                mixed_row(10.0, "red", "yes"),
                mixed_row(20.0, "blue", "yes"),
                mixed_row(30.0, "green", "no"),
                mixed_row(40.0, "blue", "no"),
            ],
        )
        .unwrap();
        let generated = smote_generate(&train, &SmoteConfig::new(100, 2)).unwrap();
        let train_pairs: Vec<(String, String)> = train
            .rows
            .iter()
            .map(|r| (r.cells[1].as_categorical().unwrap().to_string(), r.label.clone()))
            .collect();
        for row in &generated.rows {
            let pair = (
                row.cells[1].as_categorical().unwrap().to_string(),
                row.label.clone(),
            );
            assert!(train_pairs.contains(&pair), "unseen pair {pair:?}");
        }
    }

    #[test]
    fn scott_bandwidth_matches_hand_computation() {
        // population sigma exactly 1 in both coordinates
        let points: Vec<(Vec<f64>, &str)> = (0..16)
            .map(|i| {
                let s = if i % 2 == 0 { -1.0 } else { 1.0 };
                (vec![s, -s], if i < 8 { "0" } else { "1" })
            })
            .collect();
        let train = numeric_dataset(&points, Role::Train);
        let bandwidths = scott_bandwidths(&train).unwrap();
        // 16^(-1/6)
        assert!((bandwidths[0] - 0.6299605249474366).abs() < 1e-12);
        assert!((bandwidths[1] - 0.6299605249474366).abs() < 1e-12);

        let one_dim: Vec<(Vec<f64>, &str)> = (0..16)
            .map(|i| {
                let s = if i % 2 == 0 { -1.0 } else { 1.0 };
                (vec![s], if i < 8 { "0" } else { "1" })
            })
            .collect();
        let train = numeric_dataset(&one_dim, Role::Train);
        // 16^(-1/5)
        assert!((scott_bandwidths(&train).unwrap()[0] - 0.5743491774985175).abs() < 1e-12);
    }

    #[test]
    fn kde_preserves_feature_means() {
        let points: Vec<(Vec<f64>, &str)> = (0..40)
            .map(|i| (vec![i as f64 / 10.0, 5.0], if i % 2 == 0 { "0" } else { "1" }))
            .collect();
        let train = numeric_dataset(&points, Role::Train);
        let n_target = 4000;
        let generated = kde_generate(&train, &KdeConfig { n_target, seed: 21 }).unwrap();

        let train_mean =
            train.rows.iter().map(|r| r.cells[0].as_numeric().unwrap()).sum::<f64>() / 40.0;
        let gen_mean = generated
            .rows
            .iter()
            .map(|r| r.cells[0].as_numeric().unwrap())
            .sum::<f64>()
            / n_target as f64;
        let h = scott_bandwidths(&train).unwrap()[0];
        let var = train
            .rows
            .iter()
            .map(|r| {
                let v = r.cells[0].as_numeric().unwrap();
                (v - train_mean) * (v - train_mean)
            })
            .sum::<f64>()
            / 40.0;
        let se = ((var + h * h) / n_target as f64).sqrt();
        assert!(
            (gen_mean - train_mean).abs() < 4.0 * se,
            "gen mean {gen_mean} vs train mean {train_mean} (se {se})"
        );
    }

    #[test]
    fn kde_copies_labels_and_categoricals() {
        let train = Dataset::new(
            mixed_schema(),
            Role::Train,
            vec![
                mixed_row(10.0, "red", "yes"),
                mixed_row(20.0, "blue", "no"),
                mixed_row(30.0, "green", "no"),
            ],
        )
        .unwrap();
        let generated = kde_generate(&train, &KdeConfig { n_target: 50, seed: 3 }).unwrap();
        for row in &generated.rows {
            let color = row.cells[1].as_categorical().unwrap();
            let expected_label = match color {
                "red" => "yes",
                _ => "no",
            };
            assert_eq!(row.label, expected_label);
        }
    }

    #[test]
    fn kde_requires_numeric_features_and_rows() {
        let schema = TabularSchema {
            features: vec![FeatureSpec {
                name: "color".into(),
                kind: FeatureKind::Categorical,
                description: String::new(),
                levels: Some(vec!["red".into(), "blue".into()]),
            }],
            target: TargetSpec { name: "y".into(), levels: vec!["0".into(), "1".into()] },
            background: String::new(),
        };
        let rows = vec![
            Row::new(vec![Cell::categorical("red")], "0"),
            Row::new(vec![Cell::categorical("blue")], "1"),
        ];
        let train = Dataset::new(schema, Role::Train, rows).unwrap();
        assert!(matches!(
            kde_generate(&train, &KdeConfig { n_target: 5, seed: 0 }),
            Err(Error::NoNumericFeatures)
        ));

        let one_row = numeric_dataset(&[(vec![1.0], "0")], Role::Train);
        assert!(matches!(
            scott_bandwidths(&one_row),
            Err(Error::TooFewRows { need: 2, got: 1 })
        ));
    }
}
