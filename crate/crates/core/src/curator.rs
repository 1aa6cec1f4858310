//! Learning-dynamics curation of synthetic rows.
//!
//! A checkpointed classifier is fit on the real train set; every synthetic
//! row is then scored by all checkpoints. Per row we compute the mean label
//! probability (confidence) and the mean p(1-p) of the label probability
//! (aleatoric uncertainty). A row is discarded only when the model is
//! confidently against its label AND the uncertainty is low: confidence below
//! tau_conf with aleatoric below tau_al, both strict. Ambiguous rows (high
//! aleatoric) are kept. tau_al adapts to the synthetic batch as a fraction of
//! the observed aleatoric range.

use serde::{Deserialize, Serialize};

use crate::dataset::{encode, Dataset, EncodeMode, EncodingStats, Role, Row};
use crate::error::{Error, Result};
use crate::learners::{BoostConfig, GradientBoostedTrees, LogisticModel};
use crate::rng::rng_for;
use crate::schema::{FeatureKind, TabularSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuratorBackbone {
    BoostedTrees,
    SgdLinear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CuratorConfig {
    pub backbone: CuratorBackbone,
    /// Number of checkpoints E: boosting rounds or SGD epochs.
    pub n_checkpoints: usize,
    pub tree_depth: usize,
    pub learning_rate: f64,
    pub tau_conf: f64,
    /// tau_al = tau_al_fraction * (max - min) of aleatoric over the batch.
    pub tau_al_fraction: f64,
}

impl Default for CuratorConfig {
    fn default() -> Self {
        CuratorConfig {
            backbone: CuratorBackbone::BoostedTrees,
            n_checkpoints: 100,
            tree_depth: 3,
            learning_rate: 0.1,
            tau_conf: 0.2,
            tau_al_fraction: 0.75,
        }
    }
}

impl CuratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_checkpoints < 2 {
            return Err(Error::InvalidConfig(
                "n_checkpoints must be at least 2".into(),
            ));
        }
        if !(self.tau_conf > 0.0 && self.tau_conf < 1.0) {
            return Err(Error::InvalidConfig("tau_conf must lie in (0,1)".into()));
        }
        if !(self.tau_al_fraction > 0.0 && self.tau_al_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "tau_al_fraction must lie in (0,1]".into(),
            ));
        }
        if self.tree_depth == 0 {
            return Err(Error::InvalidConfig("tree_depth must be positive".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum StagedModel {
    Boosted(GradientBoostedTrees),
    Linear(Vec<LogisticModel>),
}

/// A classifier observed at E training checkpoints.
#[derive(Debug, Clone)]
pub struct CheckpointEnsemble {
    model: StagedModel,
    pub encoding_stats: EncodingStats,
    pub classes: Vec<String>,
    pub schema: TabularSchema,
}

impl CheckpointEnsemble {
    pub fn n_stages(&self) -> usize {
        match &self.model {
            StagedModel::Boosted(m) => m.n_stages(),
            StagedModel::Linear(snaps) => snaps.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Selected,
    Discarded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleDynamics {
    /// Mean probability assigned to the row's own label across checkpoints.
    pub confidence: f64,
    /// Mean p(1-p) of the label probability; at most 0.25.
    pub aleatoric: f64,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone)]
pub struct CurationOutcome {
    pub per_sample: Vec<SampleDynamics>,
    pub tau_conf: f64,
    pub tau_al: f64,
    pub curated: Dataset,
    pub discarded: Dataset,
    /// Fraction of the synthetic batch discarded.
    pub hardness: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurationSummary {
    pub thresholds: Thresholds,
    pub hardness: f64,
    pub per_sample: Vec<SampleSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_conf: f64,
    pub tau_al: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSummary {
    pub index: usize,
    pub confidence: f64,
    pub aleatoric: f64,
    pub verdict: Verdict,
}

impl CurationOutcome {
    pub fn summary(&self) -> CurationSummary {
        CurationSummary {
            thresholds: Thresholds {
                tau_conf: self.tau_conf,
                tau_al: self.tau_al,
            },
            hardness: self.hardness,
            per_sample: self
                .per_sample
                .iter()
                .enumerate()
                .map(|(index, d)| SampleSummary {
                    index,
                    confidence: d.confidence,
                    aleatoric: d.aleatoric,
                    verdict: d.verdict.expect("curated samples carry a verdict"),
                })
                .collect(),
        }
    }
}

/// Fits the checkpointed curator on the train set.
///
/// Boosted-trees backbone: checkpoint e is the prefix ensemble after e
/// boosting rounds on tree-encoded features. SGD-linear backbone: checkpoint
/// e is the logistic model after epoch e on linear-encoded features. Both are
/// deterministic per seed. An all-constant feature matrix still trains; every
/// checkpoint then predicts the class prior.
pub fn fit_checkpoints(
    train: &Dataset,
    config: &CuratorConfig,
    seed: u64,
) -> Result<CheckpointEnsemble> {
    config.validate()?;
    if train.len() < 2 || train.n_classes_present() < 2 {
        return Err(Error::SingleClassTrain);
    }
    let n_classes = train.schema.n_classes();
    let (model, stats) = match config.backbone {
        CuratorBackbone::BoostedTrees => {
            let (x, y, stats) = encode(train, EncodeMode::Tree, None)?;
            let boost_config = BoostConfig {
                n_rounds: config.n_checkpoints,
                max_depth: config.tree_depth,
                learning_rate: config.learning_rate,
                ..BoostConfig::default()
            };
            let model = GradientBoostedTrees::fit(&x, &y, n_classes, &boost_config);
            (StagedModel::Boosted(model), stats)
        }
        CuratorBackbone::SgdLinear => {
            let (x, y, stats) = encode(train, EncodeMode::Linear, None)?;
            let mut rng = rng_for("curator-sgd", seed);
            let snapshots = LogisticModel::fit_sgd_snapshots(
                &x,
                &y,
                n_classes,
                config.n_checkpoints,
                config.learning_rate,
                1e-4,
                &mut rng,
            );
            (StagedModel::Linear(snapshots), stats)
        }
    };
    Ok(CheckpointEnsemble {
        model,
        encoding_stats: stats,
        classes: train.schema.target.levels.clone(),
        schema: train.schema.clone(),
    })
}

/// Probability vectors for `x` at every checkpoint: an E×k table whose rows
/// each sum to 1.
pub fn staged_proba(ensemble: &CheckpointEnsemble, x: &Row) -> Result<Vec<Vec<f64>>> {
    check_row(&ensemble.schema, x)?;
    let encoded = ensemble.encoding_stats.transform_row(x);
    Ok(match &ensemble.model {
        StagedModel::Boosted(m) => m.staged_proba(&encoded),
        StagedModel::Linear(snaps) => snaps.iter().map(|m| m.predict_proba(&encoded)).collect(),
    })
}

fn check_row(schema: &TabularSchema, row: &Row) -> Result<()> {
    if row.cells.len() != schema.features.len() {
        return Err(Error::SchemaMismatch(format!(
            "row has {} cells, ensemble expects {}",
            row.cells.len(),
            schema.features.len()
        )));
    }
    for (cell, feature) in row.cells.iter().zip(&schema.features) {
        let ok = match feature.kind {
            FeatureKind::Numeric => cell.as_numeric().is_some(),
            FeatureKind::Categorical => cell.as_categorical().is_some(),
        };
        if !ok {
            return Err(Error::SchemaMismatch(format!(
                "cell kind does not match feature {:?}",
                feature.name
            )));
        }
    }
    Ok(())
}

/// Confidence and aleatoric uncertainty from a staged probability table,
/// reading the column of the given class index.
pub fn dynamics_from_table(table: &[Vec<f64>], class_idx: usize) -> (f64, f64) {
    let e = table.len() as f64;
    let mut conf = 0.0;
    let mut al = 0.0;
    for stage in table {
        let p = stage[class_idx];
        conf += p;
        al += p * (1.0 - p);
    }
    (conf / e, al / e)
}

/// Learning dynamics of one labeled sample under the ensemble. The verdict
/// is left unset; thresholding happens in [`curate`].
pub fn dynamics(ensemble: &CheckpointEnsemble, x: &Row, y: &str) -> Result<SampleDynamics> {
    let class_idx = ensemble
        .classes
        .iter()
        .position(|c| c == y)
        .ok_or_else(|| Error::UnknownLabel(y.to_string()))?;
    let table = staged_proba(ensemble, x)?;
    let (confidence, aleatoric) = dynamics_from_table(&table, class_idx);
    Ok(SampleDynamics {
        confidence,
        aleatoric,
        verdict: None,
    })
}

/// tau_conf comes straight from config; tau_al is the configured fraction of
/// the aleatoric range observed over the batch.
pub fn derive_thresholds(
    all_dynamics: &[SampleDynamics],
    config: &CuratorConfig,
) -> Result<(f64, f64)> {
    if all_dynamics.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for d in all_dynamics {
        min = min.min(d.aleatoric);
        max = max.max(d.aleatoric);
    }
    Ok((config.tau_conf, config.tau_al_fraction * (max - min)))
}

/// Partitions a synthetic dataset by the curation rule.
pub fn curate(
    syn: &Dataset,
    ensemble: &CheckpointEnsemble,
    config: &CuratorConfig,
) -> Result<CurationOutcome> {
    if syn.is_empty() {
        return Err(Error::EmptySynthetic);
    }
    if !syn.schema.compatible_with(&ensemble.schema) {
        return Err(Error::SchemaMismatch(
            "synthetic schema does not match the ensemble's".into(),
        ));
    }
    let mut per_sample: Vec<SampleDynamics> = syn
        .rows
        .iter()
        .map(|row| dynamics(ensemble, row, &row.label))
        .collect::<Result<_>>()?;
    let (tau_conf, tau_al) = derive_thresholds(&per_sample, config)?;

    let mut curated_idx = Vec::new();
    let mut discarded_idx = Vec::new();
    for (i, d) in per_sample.iter_mut().enumerate() {
        let discard = d.confidence < tau_conf && d.aleatoric < tau_al;
        d.verdict = Some(if discard {
            Verdict::Discarded
        } else {
            Verdict::Selected
        });
        if discard {
            discarded_idx.push(i);
        } else {
            curated_idx.push(i);
        }
    }

    let hardness = discarded_idx.len() as f64 / syn.len() as f64;
    Ok(CurationOutcome {
        per_sample,
        tau_conf,
        tau_al,
        curated: syn.subset(&curated_idx).with_role(Role::Curated),
        discarded: syn.subset(&discarded_idx).with_role(Role::Discarded),
        hardness,
    })
}
