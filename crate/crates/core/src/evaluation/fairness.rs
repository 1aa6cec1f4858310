//! Slice predicates, subgroup accuracy gains, and equalized-odds gaps.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Row};
use crate::error::{Error, Result};
use crate::evaluation::{fit_downstream, DownstreamKind, Model};
use crate::schema::{FeatureKind, TabularSchema};

/// Declarative row filter over a single feature, serializable so report
/// configs can carry slice definitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FeaturePredicate {
    /// |feature| > threshold
    AbsGt { feature: String, threshold: f64 },
    Gt { feature: String, threshold: f64 },
    Le { feature: String, threshold: f64 },
    Eq { feature: String, level: String },
}

impl FeaturePredicate {
    fn feature(&self) -> &str {
        match self {
            FeaturePredicate::AbsGt { feature, .. }
            | FeaturePredicate::Gt { feature, .. }
            | FeaturePredicate::Le { feature, .. }
            | FeaturePredicate::Eq { feature, .. } => feature,
        }
    }

    pub fn matches(&self, schema: &TabularSchema, row: &Row) -> Result<bool> {
        let idx = schema.feature_index(self.feature())?;
        let cell = &row.cells[idx];
        match self {
            FeaturePredicate::Eq { level, .. } => {
                if schema.features[idx].kind != FeatureKind::Categorical {
                    return Err(Error::InvalidConfig(format!(
                        "level predicate on numeric feature {}",
                        self.feature()
                    )));
                }
                Ok(cell.as_categorical() == Some(level.as_str()))
            }
            _ => {
                let v = cell.as_numeric().ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "numeric predicate on categorical feature {}",
                        self.feature()
                    ))
                })?;
                Ok(match self {
                    FeaturePredicate::AbsGt { threshold, .. } => v.abs() > *threshold,
                    FeaturePredicate::Gt { threshold, .. } => v > *threshold,
                    FeaturePredicate::Le { threshold, .. } => v <= *threshold,
                    FeaturePredicate::Eq { .. } => unreachable!(),
                })
            }
        }
    }

    /// Indices of matching rows.
    pub fn select(&self, data: &Dataset) -> Result<Vec<usize>> {
        data.rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| match self.matches(&data.schema, row) {
                Ok(true) => Some(Ok(i)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .collect()
    }
}

/// Accuracy on the sliced test rows of a model trained on `augmented`, minus
/// the same for a model trained on `base_train` (same kind and seed).
pub fn subgroup_gain(
    base_train: &Dataset,
    augmented: &Dataset,
    test: &Dataset,
    slice: &FeaturePredicate,
    kind: DownstreamKind,
    seed: u64,
) -> Result<f64> {
    let selected = slice.select(test)?;
    if selected.is_empty() {
        return Err(Error::EmptySlice);
    }
    let sliced = test.subset(&selected);
    let augmented_model = fit_downstream(kind, augmented, seed)?;
    let base_model = fit_downstream(kind, base_train, seed)?;
    Ok(augmented_model.accuracy(&sliced)? - base_model.accuracy(&sliced)?)
}

/// Absolute equalized-odds gaps of a binary model between a feature-defined
/// group and its complement:
/// `delta_y1 = |P(pred=1 | out, Y=1) - P(pred=1 | in, Y=1)|` (true-positive
/// gap) and `delta_y0` the analogue for predicting 0 on Y=0 rows
/// (true-negative gap). Y=1 is the positive class, `classes[1]`.
pub fn equalized_odds_diff(
    model: &Model,
    test: &Dataset,
    group: &FeaturePredicate,
) -> Result<(f64, f64)> {
    if model.n_classes() != 2 {
        return Err(Error::InvalidConfig(
            "equalized-odds gaps are defined for binary models".into(),
        ));
    }
    let predicted = model.predict_label_indices(test)?;

    // [group][y] -> (rows, hits); hit = predicted y itself
    let mut cells = [[(0usize, 0usize); 2]; 2];
    for (i, row) in test.rows.iter().enumerate() {
        let y = test.schema.level_index(&row.label)?;
        let g = usize::from(group.matches(&test.schema, row)?);
        let (n, hits) = &mut cells[g][y];
        *n += 1;
        if predicted[i] == y {
            *hits += 1;
        }
    }

    let rate = |g: usize, y: usize, name: &str| -> Result<f64> {
        let (n, hits) = cells[g][y];
        if n == 0 {
            return Err(Error::EmptyCell(name.to_string()));
        }
        Ok(hits as f64 / n as f64)
    };
    let delta_y1 = (rate(0, 1, "outside group, Y=1")? - rate(1, 1, "inside group, Y=1")?).abs();
    let delta_y0 = (rate(0, 0, "outside group, Y=0")? - rate(1, 0, "inside group, Y=0")?).abs();
    Ok((delta_y1, delta_y0))
}
