//! Feature encoding for the in-repo learners.
//!
//! Tree mode keeps numerics raw and maps categorical levels to ordinal codes;
//! linear mode z-scores numerics and one-hot encodes categoricals. Stats fit
//! on one dataset can be reapplied to another so column layouts stay aligned.

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, Row};
use crate::error::{Error, Result};
use crate::schema::FeatureKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodeMode {
    Tree,
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ColumnEncoder {
    /// Numeric value passed through unchanged.
    Passthrough,
    /// (x - mean) / std with population std; zero-variance columns map to 0.
    ZScore { mean: f64, std: f64 },
    /// Code = position among lexicographically sorted declared levels;
    /// undeclared values map to the reserved code `levels.len()`.
    Ordinal { levels: Vec<String> },
    /// One column per sorted declared level; undeclared values are all-zero.
    OneHot { levels: Vec<String> },
}

impl ColumnEncoder {
    fn width(&self) -> usize {
        match self {
            ColumnEncoder::Passthrough | ColumnEncoder::ZScore { .. } => 1,
            ColumnEncoder::Ordinal { .. } => 1,
            ColumnEncoder::OneHot { levels } => levels.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodingStats {
    pub mode: EncodeMode,
    columns: Vec<ColumnEncoder>,
    pub n_output_cols: usize,
}

impl EncodingStats {
    pub fn fit(data: &Dataset, mode: EncodeMode) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let columns: Vec<ColumnEncoder> = data
            .schema
            .features
            .iter()
            .enumerate()
            .map(|(j, feature)| match (feature.kind, mode) {
                (FeatureKind::Numeric, EncodeMode::Tree) => ColumnEncoder::Passthrough,
                (FeatureKind::Numeric, EncodeMode::Linear) => {
                    let values: Vec<f64> = data
                        .rows
                        .iter()
                        .map(|r| r.cells[j].as_numeric().expect("validated numeric cell"))
                        .collect();
                    let n = values.len() as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    ColumnEncoder::ZScore {
                        mean,
                        std: var.sqrt(),
                    }
                }
                (FeatureKind::Categorical, _) => {
                    let mut levels = feature.levels.clone().expect("validated categorical");
                    levels.sort_unstable();
                    match mode {
                        EncodeMode::Tree => ColumnEncoder::Ordinal { levels },
                        EncodeMode::Linear => ColumnEncoder::OneHot { levels },
                    }
                }
            })
            .collect();
        let n_output_cols = columns.iter().map(ColumnEncoder::width).sum();
        Ok(EncodingStats {
            mode,
            columns,
            n_output_cols,
        })
    }

    pub fn transform_row(&self, row: &Row) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_output_cols);
        for (cell, encoder) in row.cells.iter().zip(&self.columns) {
            match (encoder, cell) {
                (ColumnEncoder::Passthrough, Cell::Numeric(v)) => out.push(*v),
                (ColumnEncoder::ZScore { mean, std }, Cell::Numeric(v)) => {
                    out.push(if *std > 0.0 { (v - mean) / std } else { 0.0 });
                }
                (ColumnEncoder::Ordinal { levels }, Cell::Categorical { value, .. }) => {
                    let code = levels
                        .iter()
                        .position(|l| l == value)
                        .unwrap_or(levels.len());
                    out.push(code as f64);
                }
                (ColumnEncoder::OneHot { levels }, Cell::Categorical { value, .. }) => {
                    let hit = levels.iter().position(|l| l == value);
                    for i in 0..levels.len() {
                        out.push(if hit == Some(i) { 1.0 } else { 0.0 });
                    }
                }
                // Row/encoder kind disagreements are rejected before this
                // point by Dataset validation plus the width check below.
                _ => out.push(0.0),
            }
        }
        out
    }

    fn check_compatible(&self, data: &Dataset, mode: EncodeMode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::SchemaMismatch(format!(
                "encoding stats were fit in {:?} mode, requested {:?}",
                self.mode, mode
            )));
        }
        if self.columns.len() != data.schema.features.len() {
            return Err(Error::SchemaMismatch(format!(
                "encoding stats cover {} features, dataset has {}",
                self.columns.len(),
                data.schema.features.len()
            )));
        }
        Ok(())
    }
}

/// Encodes a dataset to a dense matrix plus label indices.
///
/// `fit_stats` reuses statistics from another dataset (typically train) so
/// both end up in the same column space; when absent, stats are fit here.
pub fn encode(
    data: &Dataset,
    mode: EncodeMode,
    fit_stats: Option<&EncodingStats>,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, EncodingStats)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let stats = match fit_stats {
        Some(stats) => {
            stats.check_compatible(data, mode)?;
            stats.clone()
        }
        None => EncodingStats::fit(data, mode)?,
    };
    let matrix: Vec<Vec<f64>> = data.rows.iter().map(|r| stats.transform_row(r)).collect();
    let labels: Vec<usize> = data
        .rows
        .iter()
        .map(|r| data.schema.level_index(&r.label))
        .collect::<Result<_>>()?;
    Ok((matrix, labels, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::{mixed_row, mixed_schema, numeric_dataset};
    use crate::dataset::{Dataset, Role, Row};

    fn mixed_data() -> Dataset {
        Dataset::new(
            mixed_schema(),
            Role::Train,
            vec![
                mixed_row(0.0, "red", "no"),
                mixed_row(2.0, "blue", "yes"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn tree_mode_uses_lexicographic_codes() {
        let data = mixed_data();
        let (matrix, labels, _) = encode(&data, EncodeMode::Tree, None).unwrap();
        // sorted levels: blue=0, green=1, red=2
        assert_eq!(matrix[0], vec![0.0, 2.0]);
        assert_eq!(matrix[1], vec![2.0, 0.0]);
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn linear_mode_zscores_to_unit_values() {
        let data = mixed_data();
        let (matrix, _, stats) = encode(&data, EncodeMode::Linear, None).unwrap();
        assert_eq!(matrix[0][0], -1.0);
        assert_eq!(matrix[1][0], 1.0);
        assert_eq!(stats.n_output_cols, 1 + 3);
        // one-hot over sorted levels blue,green,red
        assert_eq!(&matrix[0][1..], &[0.0, 0.0, 1.0]);
        assert_eq!(&matrix[1][1..], &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn novel_level_gets_reserved_code_and_zero_block() {
        let mut data = mixed_data();
        let stats_tree = EncodingStats::fit(&data, EncodeMode::Tree).unwrap();
        let stats_linear = EncodingStats::fit(&data, EncodeMode::Linear).unwrap();
        data.rows.push(Row::new(
            vec![
                Cell::Numeric(1.0),
                Cell::Categorical {
                    value: "purple".into(),
                    novel: true,
                },
            ],
            "yes",
        ));
        let row = &data.rows[2];
        assert_eq!(stats_tree.transform_row(row)[1], 3.0);
        assert_eq!(&stats_linear.transform_row(row)[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_variance_column_maps_to_zero() {
        let data = numeric_dataset(&[(vec![5.0], "0"), (vec![5.0], "1")], Role::Train);
        let (matrix, _, _) = encode(&data, EncodeMode::Linear, None).unwrap();
        assert_eq!(matrix[0][0], 0.0);
        assert_eq!(matrix[1][0], 0.0);
    }

    #[test]
    fn reused_stats_give_consistent_columns() {
        let a = numeric_dataset(&[(vec![0.0], "0"), (vec![2.0], "1")], Role::Train);
        let b = numeric_dataset(&[(vec![1.0], "0")], Role::Test);
        let (_, _, stats) = encode(&a, EncodeMode::Linear, None).unwrap();
        let (matrix, _, _) = encode(&b, EncodeMode::Linear, Some(&stats)).unwrap();
        assert_eq!(matrix[0][0], 0.0); // (1 - 1) / 1
    }

    #[test]
    fn mode_mismatch_rejected() {
        let a = numeric_dataset(&[(vec![0.0], "0"), (vec![2.0], "1")], Role::Train);
        let (_, _, stats) = encode(&a, EncodeMode::Linear, None).unwrap();
        assert!(encode(&a, EncodeMode::Tree, Some(&stats)).is_err());
    }

    #[test]
    fn empty_dataset_rejected() {
        let mut data = mixed_data();
        data.rows.clear();
        assert!(matches!(
            encode(&data, EncodeMode::Tree, None),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn reorder_yields_permuted_matrix() {
        let data = mixed_data();
        let (matrix, _, stats) = encode(&data, EncodeMode::Linear, None).unwrap();
        let swapped = data.subset(&[1, 0]);
        let (matrix2, _, _) = encode(&swapped, EncodeMode::Linear, Some(&stats)).unwrap();
        assert_eq!(matrix[0], matrix2[1]);
        assert_eq!(matrix[1], matrix2[0]);
    }
}
