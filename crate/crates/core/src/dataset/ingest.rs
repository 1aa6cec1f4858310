//! CSV ingestion against a declared schema.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, Role, Row};
use crate::error::{Error, Result};
use crate::schema::{FeatureKind, TabularSchema};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// When true, unparseable or missing feature cells are imputed with the
    /// column median (numeric) or mode (categorical) computed from the valid
    /// cells of the same file. When false (default), such rows are dropped.
    pub impute: bool,
    pub role: Role,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            impute: false,
            role: Role::Train,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    /// Rows whose label was missing or not a declared target level.
    pub dropped_bad_label: usize,
    /// Rows dropped for an unparseable/missing feature cell (impute off, or
    /// no valid values to impute from).
    pub dropped_bad_cell: usize,
    pub imputed_cells: usize,
}

pub fn ingest_csv(
    path: impl AsRef<Path>,
    schema: &TabularSchema,
    options: &IngestOptions,
) -> Result<(Dataset, IngestReport)> {
    let file = std::fs::File::open(path)?;
    ingest_csv_reader(file, schema, options)
}

pub fn ingest_csv_reader<R: Read>(
    reader: R,
    schema: &TabularSchema,
    options: &IngestOptions,
) -> Result<(Dataset, IngestReport)> {
    schema.validate()?;
    let mut csv_reader = csv::ReaderBuilder::new().flexible(false).from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let mut positions: HashMap<&str, usize> = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        if positions.insert(name, i).is_some() {
            return Err(Error::SchemaMismatch(format!(
                "duplicate column {name:?} in header"
            )));
        }
    }
    let expected = schema.column_names();
    for name in headers.iter() {
        if !expected.contains(&name) {
            return Err(Error::SchemaMismatch(format!(
                "unexpected column {name:?} in header"
            )));
        }
    }
    let feature_pos: Vec<usize> = schema
        .features
        .iter()
        .map(|f| {
            positions
                .get(f.name.as_str())
                .copied()
                .ok_or_else(|| Error::MissingColumn(f.name.clone()))
        })
        .collect::<Result<_>>()?;
    let target_pos = positions
        .get(schema.target.name.as_str())
        .copied()
        .ok_or_else(|| Error::MissingColumn(schema.target.name.clone()))?;

    let mut report = IngestReport::default();
    // First pass: parse every cell leniently, remembering valid values per
    // column so imputation statistics come from the file itself.
    let mut parsed: Vec<(Option<String>, Vec<Option<Cell>>)> = Vec::new();
    let mut numeric_valid: Vec<Vec<f64>> = vec![Vec::new(); schema.features.len()];
    let mut categorical_valid: Vec<HashMap<String, usize>> =
        vec![HashMap::new(); schema.features.len()];

    for record in csv_reader.records() {
        let record = record?;
        report.rows_read += 1;
        let label_raw = record.get(target_pos).unwrap_or("");
        let label = schema
            .target
            .levels
            .iter()
            .any(|l| l == label_raw)
            .then(|| label_raw.to_string());
        let mut cells: Vec<Option<Cell>> = Vec::with_capacity(schema.features.len());
        for (j, feature) in schema.features.iter().enumerate() {
            let raw = record.get(feature_pos[j]).unwrap_or("");
            let cell = match feature.kind {
                FeatureKind::Numeric => raw
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Cell::Numeric),
                FeatureKind::Categorical => {
                    let declared = feature
                        .levels
                        .as_ref()
                        .map(|levels| levels.iter().any(|l| l == raw))
                        .unwrap_or(false);
                    declared.then(|| Cell::categorical(raw))
                }
            };
            if label.is_some() {
                match &cell {
                    Some(Cell::Numeric(v)) => numeric_valid[j].push(*v),
                    Some(Cell::Categorical { value, .. }) => {
                        *categorical_valid[j].entry(value.clone()).or_insert(0) += 1;
                    }
                    None => {}
                }
            }
            cells.push(cell);
        }
        parsed.push((label, cells));
    }

    let imputers: Vec<Option<Cell>> = schema
        .features
        .iter()
        .enumerate()
        .map(|(j, feature)| match feature.kind {
            FeatureKind::Numeric => median(&mut numeric_valid[j]).map(Cell::Numeric),
            FeatureKind::Categorical => mode(&categorical_valid[j]).map(Cell::categorical),
        })
        .collect();

    let mut rows = Vec::new();
    'rows: for (label, cells) in parsed {
        let Some(label) = label else {
            report.dropped_bad_label += 1;
            continue;
        };
        let mut materialized = Vec::with_capacity(cells.len());
        for (j, cell) in cells.into_iter().enumerate() {
            match cell {
                Some(cell) => materialized.push(cell),
                None => {
                    if options.impute {
                        if let Some(imputed) = &imputers[j] {
                            report.imputed_cells += 1;
                            materialized.push(imputed.clone());
                            continue;
                        }
                    }
                    report.dropped_bad_cell += 1;
                    continue 'rows;
                }
            }
        }
        rows.push(Row::new(materialized, label));
    }

    report.rows_kept = rows.len();
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dataset = Dataset::new(schema.clone(), options.role, rows)?;
    Ok((dataset, report))
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

fn mode(counts: &HashMap<String, usize>) -> Option<String> {
    counts
        .iter()
        .max_by(|(va, ca), (vb, cb)| ca.cmp(cb).then_with(|| vb.cmp(va)))
        .map(|(value, _)| value.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::mixed_schema;

    fn ingest(text: &str, options: &IngestOptions) -> Result<(Dataset, IngestReport)> {
        ingest_csv_reader(text.as_bytes(), &mixed_schema(), options)
    }

    #[test]
    fn all_valid_rows_kept() {
        let text = "age,color,outcome\n30,red,yes\n40,blue,no\n50,green,yes\n";
        let (data, report) = ingest(text, &IngestOptions::default()).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(report.rows_kept, 3);
        assert_eq!(report.dropped_bad_label, 0);
        assert_eq!(report.dropped_bad_cell, 0);
    }

    #[test]
    fn header_order_insensitive() {
        let text = "outcome,age,color\nyes,30,red\n";
        let (data, _) = ingest(text, &IngestOptions::default()).unwrap();
        assert_eq!(data.rows[0].cells[0], Cell::Numeric(30.0));
        assert_eq!(data.rows[0].label, "yes");
    }

    #[test]
    fn bad_label_dropped_and_counted() {
        let text = "age,color,outcome\n30,red,maybe\n40,blue,no\n";
        let (data, report) = ingest(text, &IngestOptions::default()).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(report.dropped_bad_label, 1);
    }

    #[test]
    fn quoted_numeric_coerced() {
        let text = "age,color,outcome\n\"42.0\",red,yes\n";
        let (data, _) = ingest(text, &IngestOptions::default()).unwrap();
        assert_eq!(data.rows[0].cells[0], Cell::Numeric(42.0));
    }

    #[test]
    fn bad_cell_dropped_without_impute() {
        let text = "age,color,outcome\nxx,red,yes\n40,blue,no\n";
        let (data, report) = ingest(text, &IngestOptions::default()).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(report.dropped_bad_cell, 1);
    }

    #[test]
    fn bad_cells_imputed_with_median_and_mode() {
        let options = IngestOptions {
            impute: true,
            ..IngestOptions::default()
        };
        let text = "age,color,outcome\n10,red,yes\n20,red,no\n30,blue,yes\n,purple,yes\n";
        let (data, report) = ingest(text, &options).unwrap();
        assert_eq!(data.len(), 4);
        assert_eq!(report.imputed_cells, 2);
        assert_eq!(data.rows[3].cells[0], Cell::Numeric(20.0));
        assert_eq!(data.rows[3].cells[1], Cell::categorical("red"));
    }

    #[test]
    fn missing_column_reported() {
        let text = "age,outcome\n30,yes\n";
        match ingest(text, &IngestOptions::default()) {
            Err(Error::MissingColumn(name)) => assert_eq!(name, "color"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn unexpected_column_rejected() {
        let text = "age,color,outcome,extra\n30,red,yes,1\n";
        assert!(matches!(
            ingest(text, &IngestOptions::default()),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn empty_result_is_error() {
        let text = "age,color,outcome\n30,red,maybe\n";
        assert!(matches!(
            ingest(text, &IngestOptions::default()),
            Err(Error::EmptyDataset)
        ));
    }
}
