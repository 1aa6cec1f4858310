//! Typed tabular datasets: cells, rows, roles, and CSV serialization.

mod encode;
mod ingest;
mod split;

pub use encode::{encode, ColumnEncoder, EncodeMode, EncodingStats};
pub use ingest::{ingest_csv, ingest_csv_reader, IngestOptions, IngestReport};
pub use split::{make_splits, SplitResult};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{FeatureKind, TabularSchema};

/// One value in a row. Categorical values carry a `novel` flag when the value
/// was not declared in the schema (generators may extrapolate new levels).
#[derive(Debug, Clone)]
pub enum Cell {
    Numeric(f64),
    Categorical { value: String, novel: bool },
}

impl Cell {
    pub fn categorical(value: impl Into<String>) -> Self {
        Cell::Categorical {
            value: value.into(),
            novel: false,
        }
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            Cell::Numeric(v) => Some(*v),
            Cell::Categorical { .. } => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&str> {
        match self {
            Cell::Numeric(_) => None,
            Cell::Categorical { value, .. } => Some(value),
        }
    }

    pub fn csv_value(&self) -> String {
        match self {
            Cell::Numeric(v) => format!("{v}"),
            Cell::Categorical { value, .. } => value.clone(),
        }
    }

    fn key_fragment(&self, out: &mut String) {
        match self {
            Cell::Numeric(v) => {
                // +0.0 folds -0.0 and 0.0 into one key.
                out.push_str(&format!("n{:016x}", (v + 0.0).to_bits()));
            }
            Cell::Categorical { value, .. } => {
                out.push_str(&format!("c{}:{}", value.len(), value));
            }
        }
    }
}

/// Value equality; the `novel` flag is provenance, not identity.
impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Cell::Numeric(a), Cell::Numeric(b)) => a == b,
            (Cell::Categorical { value: a, .. }, Cell::Categorical { value: b, .. }) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cells: Vec<Cell>,
    pub label: String,
}

impl Row {
    pub fn new(cells: Vec<Cell>, label: impl Into<String>) -> Self {
        Row {
            cells,
            label: label.into(),
        }
    }

    /// Canonical string key for exact-duplicate detection.
    pub fn dedup_key(&self) -> String {
        let mut key = String::new();
        for cell in &self.cells {
            cell.key_fragment(&mut key);
            key.push('\u{1f}');
        }
        key.push_str(&format!("l{}:{}", self.label.len(), self.label));
        key
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Oracle,
    Test,
    Synthetic,
    Curated,
    Discarded,
    Merged,
}

/// Rows plus the schema they conform to and a provenance role.
///
/// `flip_audit` is a per-row bit recorded by the mock generator when a label
/// was flipped at sampling time. It exists for harness-side audits only;
/// nothing on the modeling path reads it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: TabularSchema,
    pub rows: Vec<Row>,
    pub role: Role,
    pub flip_audit: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(schema: TabularSchema, role: Role, rows: Vec<Row>) -> Result<Self> {
        schema.validate()?;
        for (i, row) in rows.iter().enumerate() {
            validate_row(&schema, row).map_err(|e| match e {
                Error::SchemaMismatch(msg) => Error::SchemaMismatch(format!("row {i}: {msg}")),
                other => other,
            })?;
        }
        Ok(Dataset {
            schema,
            rows,
            role,
            flip_audit: None,
        })
    }

    pub fn with_audit(mut self, audit: Vec<bool>) -> Result<Self> {
        if audit.len() != self.rows.len() {
            return Err(Error::SchemaMismatch(format!(
                "audit length {} does not match {} rows",
                audit.len(),
                self.rows.len()
            )));
        }
        self.flip_audit = Some(audit);
        Ok(self)
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row counts aligned to `schema.target.levels`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.schema.n_classes()];
        for row in &self.rows {
            if let Ok(idx) = self.schema.level_index(&row.label) {
                counts[idx] += 1;
            }
        }
        counts
    }

    pub fn n_classes_present(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// New dataset holding the given rows (by index), preserving order and
    /// carrying the matching audit bits when present.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let flip_audit = self
            .flip_audit
            .as_ref()
            .map(|audit| indices.iter().map(|&i| audit[i]).collect());
        Dataset {
            schema: self.schema.clone(),
            rows,
            role: self.role,
            flip_audit,
        }
    }

    pub fn concat(&self, other: &Dataset, role: Role) -> Result<Dataset> {
        if !self.schema.compatible_with(&other.schema) {
            return Err(Error::SchemaMismatch(
                "cannot concatenate datasets with different schemas".into(),
            ));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        let flip_audit = match (&self.flip_audit, &other.flip_audit) {
            (Some(a), Some(b)) => {
                let mut bits = a.clone();
                bits.extend_from_slice(b);
                Some(bits)
            }
            _ => None,
        };
        Ok(Dataset {
            schema: self.schema.clone(),
            rows,
            role,
            flip_audit,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.column_names())?;
        for row in &self.rows {
            let mut record: Vec<String> = row.cells.iter().map(Cell::csv_value).collect();
            record.push(row.label.clone());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn validate_row(schema: &TabularSchema, row: &Row) -> Result<()> {
    if row.cells.len() != schema.features.len() {
        return Err(Error::SchemaMismatch(format!(
            "expected {} cells, got {}",
            schema.features.len(),
            row.cells.len()
        )));
    }
    for (cell, feature) in row.cells.iter().zip(&schema.features) {
        match (cell, feature.kind) {
            (Cell::Numeric(v), FeatureKind::Numeric) => {
                if !v.is_finite() {
                    return Err(Error::SchemaMismatch(format!(
                        "non-finite value in numeric feature {:?}",
                        feature.name
                    )));
                }
            }
            (Cell::Categorical { value, novel }, FeatureKind::Categorical) => {
                let declared = feature
                    .levels
                    .as_ref()
                    .map(|levels| levels.iter().any(|l| l == value))
                    .unwrap_or(false);
                if declared == *novel {
                    return Err(Error::SchemaMismatch(format!(
                        "categorical value {:?} in feature {:?} has novel={} but declared={}",
                        value, feature.name, novel, declared
                    )));
                }
            }
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "cell kind does not match feature {:?}",
                    feature.name
                )));
            }
        }
    }
    schema.level_index(&row.label)?;
    Ok(())
}
