//! Train-on-synthetic, test-on-real harness plus the audit metrics reported
//! alongside it: generative precision/recall, neighborhood label agreement,
//! oracle agreement, hardness regression, subgroup gains, and equalized-odds
//! differences.

mod auc;
mod coverage;
mod exports;
mod fairness;

pub use auc::{macro_ovr_auc, roc_auc};
pub use coverage::{precision_recall, PRResult};
pub use exports::{embedding_csv, eval_reports_to_csv, EVAL_CSV_HEADER};
pub use fairness::{equalized_odds_diff, subgroup_gain, FeaturePredicate};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, EncodeMode, EncodingStats};
use crate::error::{Error, Result};
use crate::learners::{
    BoostConfig, ClassificationTree, ForestConfig, GradientBoostedTrees, LogisticConfig,
    LogisticModel, RandomForest, TreeConfig,
};
use crate::rng::rng_for;
use crate::schema::TabularSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownstreamKind {
    BoostedTrees,
    RandomForest,
    DecisionTree,
    LogisticRegression,
}

impl DownstreamKind {
    pub fn all() -> [DownstreamKind; 4] {
        [
            DownstreamKind::BoostedTrees,
            DownstreamKind::RandomForest,
            DownstreamKind::DecisionTree,
            DownstreamKind::LogisticRegression,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            DownstreamKind::BoostedTrees => "boosted_trees",
            DownstreamKind::RandomForest => "random_forest",
            DownstreamKind::DecisionTree => "decision_tree",
            DownstreamKind::LogisticRegression => "logistic_regression",
        }
    }
}

impl fmt::Display for DownstreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DownstreamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<DownstreamKind> {
        match s {
            "boosted_trees" => Ok(DownstreamKind::BoostedTrees),
            "random_forest" => Ok(DownstreamKind::RandomForest),
            "decision_tree" => Ok(DownstreamKind::DecisionTree),
            "logistic_regression" => Ok(DownstreamKind::LogisticRegression),
            other => Err(Error::InvalidConfig(format!("unknown model kind: {other}"))),
        }
    }
}

#[derive(Debug, Clone)]
enum ModelInner {
    Boosted(GradientBoostedTrees),
    Forest(RandomForest),
    Tree(ClassificationTree),
    Logistic(LogisticModel),
}

/// A fitted downstream classifier bound to the encoding it was trained with.
#[derive(Debug, Clone)]
pub struct Model {
    pub kind: DownstreamKind,
    pub classes: Vec<String>,
    stats: EncodingStats,
    schema: TabularSchema,
    inner: ModelInner,
}

impl Model {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn check(&self, data: &Dataset) -> Result<()> {
        if !data.schema.compatible_with(&self.schema) {
            return Err(Error::SchemaMismatch(
                "dataset does not match the schema the model was fit on".into(),
            ));
        }
        Ok(())
    }

    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check(data)?;
        Ok(data
            .rows
            .iter()
            .map(|row| {
                let x = self.stats.transform_row(row);
                match &self.inner {
                    ModelInner::Boosted(m) => m.predict_proba(&x),
                    ModelInner::Forest(m) => m.predict_proba(&x),
                    ModelInner::Tree(m) => m.predict_proba(&x),
                    ModelInner::Logistic(m) => m.predict_proba(&x),
                }
            })
            .collect())
    }

    /// Probability of the positive class (`classes[1]`); binary models only.
    pub fn positive_scores(&self, data: &Dataset) -> Result<Vec<f64>> {
        if self.n_classes() != 2 {
            return Err(Error::InvalidConfig(
                "positive-class scores are defined for binary models".into(),
            ));
        }
        Ok(self.predict_proba(data)?.into_iter().map(|p| p[1]).collect())
    }

    /// Hard labels as indices into `classes`. Binary models predict class 1
    /// iff its score is at least 0.5; otherwise the argmax class wins.
    pub fn predict_label_indices(&self, data: &Dataset) -> Result<Vec<usize>> {
        let proba = self.predict_proba(data)?;
        Ok(proba
            .into_iter()
            .map(|p| {
                if p.len() == 2 {
                    usize::from(p[1] >= 0.5)
                } else {
                    p.iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                        .map(|(i, _)| i)
                        .unwrap_or(0)
                }
            })
            .collect())
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let predicted = self.predict_label_indices(data)?;
        let mut hits = 0usize;
        for (row, &p) in data.rows.iter().zip(&predicted) {
            let y = data.schema.level_index(&row.label)?;
            if y == p {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.rows.len() as f64)
    }
}

/// Fits one downstream classifier with fixed, documented defaults: boosted
/// trees 100 rounds at depth 3, random forest 100 trees with sqrt-feature
/// splits on bootstrap resamples, a single Gini tree grown to purity, and an
/// L2 logistic regression run to gradient tolerance 1e-6 (at most 1000
/// epochs) on one-hot/standardized inputs. Tree-based kinds use ordinal
/// encoding. Deterministic per (kind, data, seed).
pub fn fit_downstream(kind: DownstreamKind, data: &Dataset, seed: u64) -> Result<Model> {
    if data.n_classes_present() < 2 {
        return Err(Error::SingleClassTrain);
    }
    let n_classes = data.schema.n_classes();
    let mode = match kind {
        DownstreamKind::LogisticRegression => EncodeMode::Linear,
        _ => EncodeMode::Tree,
    };
    let (x, y, stats) = crate::dataset::encode(data, mode, None)?;

    let inner = match kind {
        DownstreamKind::BoostedTrees => {
            ModelInner::Boosted(GradientBoostedTrees::fit(&x, &y, n_classes, &BoostConfig::default()))
        }
        DownstreamKind::RandomForest => {
            let mut rng = rng_for("forest", seed);
            ModelInner::Forest(RandomForest::fit(&x, &y, n_classes, &ForestConfig::default(), &mut rng))
        }
        DownstreamKind::DecisionTree => {
            let mut rng = rng_for("tree", seed);
            let indices: Vec<usize> = (0..x.len()).collect();
            ModelInner::Tree(ClassificationTree::fit(
                &x,
                &y,
                &indices,
                n_classes,
                &TreeConfig::default(),
                &mut rng,
            ))
        }
        DownstreamKind::LogisticRegression => {
            ModelInner::Logistic(LogisticModel::fit_gd(&x, &y, n_classes, &LogisticConfig::default()))
        }
    };

    Ok(Model {
        kind,
        classes: data.schema.target.levels.clone(),
        stats,
        schema: data.schema.clone(),
        inner,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_model_auc: BTreeMap<String, f64>,
    pub mean_auc: f64,
    pub n_train_rows: usize,
    /// Which training source produced the fit, e.g. "train-only", "curated".
    pub source_tag: String,
}

/// Train-on-`train_like`, test-on-`test`: fits every requested kind and
/// reports per-model and mean test AUC (macro one-vs-rest beyond two
/// classes).
pub fn tstr(
    train_like: &Dataset,
    test: &Dataset,
    kinds: &[DownstreamKind],
    seed: u64,
    source_tag: &str,
) -> Result<EvalReport> {
    if !train_like.schema.compatible_with(&test.schema) {
        return Err(Error::SchemaMismatch(
            "train and test datasets disagree on schema".into(),
        ));
    }
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("tstr needs at least one model kind".into()));
    }

    let mut per_model_auc = BTreeMap::new();
    for &kind in kinds {
        let model = fit_downstream(kind, train_like, seed)?;
        let auc = if model.n_classes() == 2 {
            let scores = model.positive_scores(test)?;
            let positive = &test.schema.target.levels[1];
            let labels: Vec<bool> = test.rows.iter().map(|r| &r.label == positive).collect();
            roc_auc(&scores, &labels)?
        } else {
            let proba = model.predict_proba(test)?;
            let labels: Vec<usize> = test
                .rows
                .iter()
                .map(|r| test.schema.level_index(&r.label))
                .collect::<Result<_>>()?;
            macro_ovr_auc(&proba, &labels, model.n_classes())?
        };
        per_model_auc.insert(kind.name().to_string(), auc);
    }
    let mean_auc = per_model_auc.values().sum::<f64>() / per_model_auc.len() as f64;
    Ok(EvalReport {
        per_model_auc,
        mean_auc,
        n_train_rows: train_like.rows.len(),
        source_tag: source_tag.to_string(),
    })
}

/// Mean over rows of the same-label fraction among each row's `k` nearest
/// neighbors (Euclidean in the one-hot/standardized encoding fit on `data`,
/// self excluded). Ties on distance break by row index, so the result does
/// not depend on row order beyond genuinely tied geometry.
pub fn knn_label_agreement(data: &Dataset, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    let n = data.rows.len();
    if n < k + 1 {
        return Err(Error::TooFewRows { need: k + 1, got: n });
    }
    let (x, y, _) = crate::dataset::encode(data, EncodeMode::Linear, None)?;

    let mut total = 0.0;
    for i in 0..n {
        let mut dist: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist2(&x[i], &x[j]), j))
            .collect();
        dist.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let same = dist[..k].iter().filter(|&&(_, j)| y[j] == y[i]).count();
        total += same as f64 / k as f64;
    }
    Ok(total / n as f64)
}

/// Fits a label oracle of the given kind on `oracle` data and returns the
/// fraction of `target` rows whose stored label matches the oracle's
/// prediction.
pub fn oracle_agreement(
    oracle: &Dataset,
    target: &Dataset,
    kind: DownstreamKind,
    seed: u64,
) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let model = fit_downstream(kind, oracle, seed)?;
    let predicted = model.predict_label_indices(target)?;
    let mut hits = 0usize;
    for (row, &p) in target.rows.iter().zip(&predicted) {
        if target.schema.level_index(&row.label)? == p {
            hits += 1;
        }
    }
    Ok(hits as f64 / target.rows.len() as f64)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    /// True when the response values were constant, which leaves the
    /// correlation undefined; it is reported as 0 in that case.
    pub degenerate_y: bool,
}

/// Ordinary least squares of AUC on hardness plus the Pearson correlation.
pub fn hardness_regression(points: &[(f64, f64)]) -> Result<RegressionSummary> {
    if points.len() < 2 {
        return Err(Error::DegenerateX);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let degenerate_y = syy == 0.0;
    let pearson_r = if degenerate_y { 0.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(RegressionSummary { slope, intercept, pearson_r, degenerate_y })
}
