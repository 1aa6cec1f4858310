//! Dataset schema: typed feature declarations, target levels, and the
//! free-text background used when prompting a generator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// One-line meaning of the column, quoted in context-bearing prompts.
    #[serde(default)]
    pub description: String,
    /// Declared levels; required for categorical features, absent for numeric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    /// Label vocabulary. Order is meaningful: binary metrics treat
    /// `levels[1]` as the positive class.
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSchema {
    pub features: Vec<FeatureSpec>,
    pub target: TargetSpec,
    /// Domain context handed to the generator ("medical records from ...").
    #[serde(default)]
    pub background: String,
}

impl TabularSchema {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: TabularSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::InvalidSchema("no features declared".into()));
        }
        let mut names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        names.push(self.target.name.as_str());
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSchema("duplicate column names".into()));
        }
        for f in &self.features {
            match (f.kind, &f.levels) {
                (FeatureKind::Categorical, None) => {
                    return Err(Error::InvalidSchema(format!(
                        "categorical feature {:?} declares no levels",
                        f.name
                    )));
                }
                (FeatureKind::Categorical, Some(levels)) if levels.is_empty() => {
                    return Err(Error::InvalidSchema(format!(
                        "categorical feature {:?} declares no levels",
                        f.name
                    )));
                }
                (FeatureKind::Numeric, Some(_)) => {
                    return Err(Error::InvalidSchema(format!(
                        "numeric feature {:?} must not declare levels",
                        f.name
                    )));
                }
                _ => {}
            }
        }
        if self.target.levels.len() < 2 {
            return Err(Error::InvalidSchema(
                "target declares fewer than two levels".into(),
            ));
        }
        let mut levels = self.target.levels.clone();
        levels.sort_unstable();
        if levels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSchema("duplicate target levels".into()));
        }
        Ok(())
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn level_index(&self, label: &str) -> Result<usize> {
        self.target
            .levels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn n_classes(&self) -> usize {
        self.target.levels.len()
    }

    /// Feature names followed by the target name, in declaration order.
    pub fn column_names(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        cols.push(self.target.name.as_str());
        cols
    }

    /// Structural equality ignoring prose: same features (name/kind/levels)
    /// and same target. Background and descriptions may differ.
    pub fn compatible_with(&self, other: &TabularSchema) -> bool {
        self.target == other.target
            && self.features.len() == other.features.len()
            && self
                .features
                .iter()
                .zip(&other.features)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind && a.levels == b.levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_schema() -> TabularSchema {
        TabularSchema {
            features: vec![
                FeatureSpec {
                    name: "age".into(),
                    kind: FeatureKind::Numeric,
                    description: "age in years".into(),
                    levels: None,
                },
                FeatureSpec {
                    name: "color".into(),
                    kind: FeatureKind::Categorical,
                    description: "preferred color".into(),
                    levels: Some(vec!["blue".into(), "red".into()]),
                },
            ],
            target: TargetSpec {
                name: "outcome".into(),
                levels: vec!["0".into(), "1".into()],
            },
            background: "toy records".into(),
        }
    }

    #[test]
    fn json_round_trip() {
        let schema = toy_schema();
        let text = serde_json::to_string(&schema).unwrap();
        let back = TabularSchema::from_json(&text).unwrap();
        assert_eq!(schema, back);
    }

    #[test]
    fn parses_external_form() {
        let text = r#"{
            "features": [
                {"name": "x1", "kind": "numeric", "description": "first coordinate"},
                {"name": "sex", "kind": "categorical", "levels": ["F", "M"]}
            ],
            "target": {"name": "y", "levels": ["no", "yes"]},
            "background": "records"
        }"#;
        let schema = TabularSchema::from_json(text).unwrap();
        assert_eq!(schema.features[0].kind, FeatureKind::Numeric);
        assert_eq!(schema.features[1].levels.as_deref().unwrap().len(), 2);
        assert_eq!(schema.level_index("yes").unwrap(), 1);
    }

    #[test]
    fn rejects_duplicate_names() {
        let mut schema = toy_schema();
        schema.features[1].name = "age".into();
        assert!(matches!(schema.validate(), Err(Error::InvalidSchema(_))));
    }

    #[test]
    fn rejects_categorical_without_levels() {
        let mut schema = toy_schema();
        schema.features[1].levels = None;
        assert!(schema.validate().is_err());
    }

    #[test]
    fn rejects_single_level_target() {
        let mut schema = toy_schema();
        schema.target.levels = vec!["0".into()];
        assert!(schema.validate().is_err());
    }

    #[test]
    fn unknown_lookups_error() {
        let schema = toy_schema();
        assert!(matches!(
            schema.feature_index("nope"),
            Err(Error::UnknownFeature(_))
        ));
        assert!(matches!(
            schema.level_index("2"),
            Err(Error::UnknownLabel(_))
        ));
    }
}
