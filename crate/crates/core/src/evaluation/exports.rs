//! Flat-file exports: evaluation results as CSV and encoded features for
//! external embedding/visualization tools.

use crate::dataset::{Dataset, EncodeMode, EncodingStats, Role};
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::schema::FeatureKind;

pub const EVAL_CSV_HEADER: [&str; 6] = ["dataset", "n_train", "seed", "source", "model", "auc"];

/// One CSV row per (source, model) pair, mirroring the shape of a results
/// table. Includes the header line.
pub fn eval_reports_to_csv(
    dataset: &str,
    n_train: usize,
    seed: u64,
    reports: &[EvalReport],
) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(EVAL_CSV_HEADER)?;
    for report in reports {
        for (model, auc) in &report.per_model_auc {
            writer.write_record([
                dataset,
                &n_train.to_string(),
                &seed.to_string(),
                &report.source_tag,
                model,
                &format!("{auc}"),
            ])?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Encoded feature matrix of several datasets in a shared column space
/// (one-hot + z-scores fit on their union), one row per sample, tagged with
/// its source and label. Intended as input for external projection tools.
pub fn embedding_csv(parts: &[(&Dataset, &str)]) -> Result<String> {
    let (first, rest) = parts.split_first().ok_or(Error::EmptyInput)?;
    let mut union = first.0.clone();
    union.flip_audit = None;
    for (data, _) in rest {
        union = union.concat(data, Role::Merged)?;
    }
    let stats = EncodingStats::fit(&union, EncodeMode::Linear)?;

    let mut header: Vec<String> = Vec::with_capacity(stats.n_output_cols + 2);
    for feature in &union.schema.features {
        match feature.kind {
            FeatureKind::Numeric => header.push(feature.name.clone()),
            FeatureKind::Categorical => {
                let mut levels = feature.levels.clone().expect("validated categorical");
                levels.sort_unstable();
                for level in levels {
                    header.push(format!("{}={}", feature.name, level));
                }
            }
        }
    }
    header.push("label".into());
    header.push("source".into());

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header)?;
    for (data, tag) in parts {
        for row in &data.rows {
            let mut record: Vec<String> = stats
                .transform_row(row)
                .into_iter()
                .map(|v| format!("{v}"))
                .collect();
            record.push(row.label.clone());
            record.push(tag.to_string());
            writer.write_record(&record)?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
