//! Prompt construction and response parsing for in-context row generation.
//!
//! The prompt has three content parts: an optional background sentence, the
//! serialized train examples (one JSON object per line, keys in schema
//! order), and a field-schema block. With context off, the background is
//! dropped and the schema block lists bare field names, leaving only the
//! numerical in-context examples to carry the signal.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, Row};
use crate::error::{Error, Result};
use crate::schema::{FeatureKind, TabularSchema};

pub const SYSTEM_TEXT: &str = "You are a tabular synthetic data generation model.";

/// Default prompt template. Placeholders: {background}, {n}, {examples},
/// {schema}. Custom templates loaded from a file use the same placeholders.
pub const DEFAULT_TEMPLATE: &str = "\
You are a synthetic data generator.
Your goal is to produce data which mirrors the given examples in causal structure and feature and label distributions but also produce as diverse samples as possible.

I will give you real examples first.

{background}

Generate {n} realistic but diverse samples.

example data:
{examples}

The output should be a markdown code snippet formatted in the following schema:

```json
{schema}
```

DO NOT COPY THE EXAMPLES but generate realistic but new and diverse samples which have the correct label conditioned on the features.
";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub background_block: Option<String>,
    pub examples_block: String,
    pub schema_block: String,
    pub instruction_block: String,
    pub n_requested: usize,
    pub include_context: bool,
}

impl PromptBundle {
    /// Fills a template's placeholders with this bundle's blocks. `None`
    /// renders the default template.
    pub fn render_user(&self, template: Option<&str>) -> String {
        let template = template.unwrap_or(DEFAULT_TEMPLATE);
        let mut text = template
            .replace("{background}", self.background_block.as_deref().unwrap_or(""))
            .replace("{n}", &self.n_requested.to_string())
            .replace("{examples}", &self.examples_block)
            .replace("{schema}", &self.schema_block);
        while text.contains("\n\n\n") {
            text = text.replace("\n\n\n", "\n\n");
        }
        text.trim_start().to_string()
    }

    /// Same prompt re-targeted at a different row count; used when a
    /// generation budget is spread over several calls.
    pub fn with_n_requested(&self, n: usize) -> PromptBundle {
        let mut bundle = self.clone();
        let old = format!("Generate {} realistic", self.n_requested);
        let new = format!("Generate {n} realistic");
        bundle.instruction_block = bundle.instruction_block.replace(&old, &new);
        bundle.n_requested = n;
        bundle
    }
}

/// Serializes one row as a compact JSON object with schema-ordered keys and
/// the target as the final key.
pub fn row_to_json_line(schema: &TabularSchema, row: &Row) -> String {
    let mut line = String::from("{");
    for (feature, cell) in schema.features.iter().zip(&row.cells) {
        line.push_str(&json_string(&feature.name));
        line.push(':');
        match cell {
            Cell::Numeric(v) => line.push_str(&json_number(*v)),
            Cell::Categorical { value, .. } => line.push_str(&json_string(value)),
        }
        line.push(',');
    }
    line.push_str(&json_string(&schema.target.name));
    line.push(':');
    line.push_str(&json_string(&row.label));
    line.push('}');
    line
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn json_number(v: f64) -> String {
    serde_json::Number::from_f64(v)
        .expect("finite numeric cell")
        .to_string()
}

pub fn build_prompt(
    schema: &TabularSchema,
    train: &Dataset,
    n_requested: usize,
    include_context: bool,
) -> Result<PromptBundle> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    if !train.schema.compatible_with(schema) {
        return Err(Error::SchemaMismatch(
            "train data does not conform to the prompt schema".into(),
        ));
    }

    let examples_block = train
        .rows
        .iter()
        .map(|row| row_to_json_line(schema, row))
        .collect::<Vec<_>>()
        .join("\n");

    let mut schema_lines = Vec::with_capacity(schema.features.len() + 1);
    for feature in &schema.features {
        let kind = match feature.kind {
            FeatureKind::Numeric => "number",
            FeatureKind::Categorical => "string",
        };
        let mut line = format!("{}: {}", json_string(&feature.name), kind);
        if include_context {
            let mut notes = Vec::new();
            if !feature.description.trim().is_empty() {
                notes.push(feature.description.trim().to_string());
            }
            if let Some(levels) = &feature.levels {
                notes.push(format!("one of: {}", levels.join(", ")));
            }
            if !notes.is_empty() {
                line.push_str(&format!("  // {}", notes.join("; ")));
            }
        }
        schema_lines.push(line);
    }
    let mut target_line = format!("{}: string", json_string(&schema.target.name));
    if include_context {
        target_line.push_str(&format!(
            "  // label, one of: {}",
            schema.target.levels.join(", ")
        ));
    }
    schema_lines.push(target_line);

    let background_block = include_context
        .then(|| format!("Context: {}", schema.background.trim()));

    Ok(PromptBundle {
        system_text: SYSTEM_TEXT.to_string(),
        background_block,
        examples_block,
        schema_block: schema_lines.join("\n"),
        instruction_block: format!("Generate {n_requested} realistic but diverse samples."),
        n_requested,
        include_context,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    MalformedJson,
    NotAnObject,
    MissingLabel,
    InvalidLabel(String),
    MissingField(String),
    BadNumeric(String),
    BadCategorical(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedRow {
    pub raw_text: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParseReport {
    /// Candidates that parsed into schema-valid rows. Rows dropped as
    /// duplicates still count here; emitted rows = accepted minus duplicates.
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
    /// Rows that needed at least one type coercion (quoted numeric, numeric
    /// label, boolean flag).
    pub coerced: usize,
    pub duplicates_of_train: usize,
    /// Exact repeats of rows already accepted earlier in a multi-call
    /// generation run; always 0 for a single parse.
    pub duplicates_of_synthetic: usize,
}

impl ParseReport {
    pub fn merge(&mut self, other: ParseReport) {
        self.accepted += other.accepted;
        self.rejected.extend(other.rejected);
        self.coerced += other.coerced;
        self.duplicates_of_train += other.duplicates_of_train;
        self.duplicates_of_synthetic += other.duplicates_of_synthetic;
    }
}

/// Extracts schema-conformant rows from arbitrary model output.
///
/// Candidates are balanced top-level `{...}` spans, taken from inside fenced
/// code blocks when any exist, otherwise from the whole text. Never fails:
/// every malformed candidate lands in the report instead. Exact duplicates
/// of train rows are counted and withheld from the returned rows.
pub fn parse_llm_output(
    text: &str,
    schema: &TabularSchema,
    train: &Dataset,
) -> (Vec<Row>, ParseReport) {
    let source = fenced_content(text);
    let candidates = object_spans(&source);

    let train_keys: HashSet<String> = train.rows.iter().map(Row::dedup_key).collect();
    let mut report = ParseReport::default();
    let mut rows = Vec::new();

    for candidate in candidates {
        match parse_candidate(&candidate, schema) {
            Ok((row, coerced)) => {
                report.accepted += 1;
                if coerced {
                    report.coerced += 1;
                }
                if train_keys.contains(&row.dedup_key()) {
                    report.duplicates_of_train += 1;
                } else {
                    rows.push(row);
                }
            }
            Err(reason) => report.rejected.push(RejectedRow {
                raw_text: candidate,
                reason,
            }),
        }
    }
    (rows, report)
}

fn fenced_content(text: &str) -> String {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block.join("\n")),
                None => current = Some(Vec::new()),
            }
            continue;
        }
        if let Some(block) = &mut current {
            block.push(line);
        }
    }
    if let Some(block) = current {
        // unterminated fence: take what followed it
        blocks.push(block.join("\n"));
    }
    if blocks.is_empty() {
        text.to_string()
    } else {
        blocks.join("\n")
    }
}

/// Balanced top-level `{...}` spans, string-aware.
fn object_spans(text: &str) -> Vec<String> {
    let mut spans = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text.char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }
        match ch {
            '"' if depth > 0 => in_string = true,
            '{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            '}' => {
                if depth > 0 {
                    depth -= 1;
                    if depth == 0 {
                        spans.push(text[start..=i].to_string());
                    }
                }
            }
            _ => {}
        }
    }
    if depth > 0 {
        spans.push(text[start..].to_string());
    }
    spans
}

fn parse_candidate(
    candidate: &str,
    schema: &TabularSchema,
) -> std::result::Result<(Row, bool), RejectReason> {
    let value: serde_json::Value =
        serde_json::from_str(candidate).map_err(|_| RejectReason::MalformedJson)?;
    let object = value.as_object().ok_or(RejectReason::NotAnObject)?;

    let mut coerced = false;
    let mut cells = Vec::with_capacity(schema.features.len());
    for feature in &schema.features {
        let raw = object
            .get(&feature.name)
            .ok_or_else(|| RejectReason::MissingField(feature.name.clone()))?;
        match feature.kind {
            FeatureKind::Numeric => {
                let (v, c) = value_to_f64(raw)
                    .ok_or_else(|| RejectReason::BadNumeric(feature.name.clone()))?;
                coerced |= c;
                cells.push(Cell::Numeric(v));
            }
            FeatureKind::Categorical => {
                let (s, c) = value_to_string(raw)
                    .ok_or_else(|| RejectReason::BadCategorical(feature.name.clone()))?;
                coerced |= c;
                let novel = !feature
                    .levels
                    .as_ref()
                    .map(|levels| levels.iter().any(|l| l == &s))
                    .unwrap_or(false);
                cells.push(Cell::Categorical { value: s, novel });
            }
        }
    }

    let raw_label = object
        .get(&schema.target.name)
        .ok_or(RejectReason::MissingLabel)?;
    let (label, label_coerced) =
        value_to_string(raw_label).ok_or(RejectReason::MissingLabel)?;
    coerced |= label_coerced;
    if !schema.target.levels.iter().any(|l| l == &label) {
        return Err(RejectReason::InvalidLabel(label));
    }
    Ok((Row::new(cells, label), coerced))
}

fn value_to_f64(value: &serde_json::Value) -> Option<(f64, bool)> {
    match value {
        serde_json::Value::Number(n) => n.as_f64().filter(|v| v.is_finite()).map(|v| (v, false)),
        serde_json::Value::String(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| (v, true)),
        serde_json::Value::Bool(b) => Some((f64::from(u8::from(*b)), true)),
        _ => None,
    }
}

fn value_to_string(value: &serde_json::Value) -> Option<(String, bool)> {
    match value {
        serde_json::Value::String(s) => Some((s.clone(), false)),
        serde_json::Value::Number(n) => {
            let text = if let Some(i) = n.as_i64() {
                i.to_string()
            } else if let Some(u) = n.as_u64() {
                u.to_string()
            } else {
                let v = n.as_f64()?;
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    format!("{}", v as i64)
                } else {
                    format!("{v}")
                }
            };
            Some((text, true))
        }
        serde_json::Value::Bool(b) => Some((b.to_string(), true)),
        _ => None,
    }
}
