//! Built-in classifiers and hyperparameter sampling for the model solver.

mod knn;
mod logistic;
mod naive_bayes;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataRow, Dataset, RowId};

pub use knn::{Distance, KNearestNeighbors};
pub use logistic::{cross_entropy_loss_and_gradient, LogisticRegression};
pub use naive_bayes::GaussianNaiveBayes;
pub use tree::{DecisionTree, TreeNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("unknown row id `{0}`")]
    UnknownId(RowId),
    #[error("config {index}: parameter `{name}` is missing or has the wrong type")]
    InvalidParam { index: usize, name: String },
    #[error("row has {got} features, classifier expects {expected}")]
    ArityMismatch { expected: usize, got: usize },
}

impl TrainError {
    pub fn code(&self) -> &'static str {
        match self {
            TrainError::EmptyTrainingSet => "EmptyTrainingSet",
            TrainError::UnknownId(_) => "UnknownId",
            TrainError::InvalidParam { .. } => "InvalidParam",
            TrainError::ArityMismatch { .. } => "ArityMismatch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    DecisionTree,
    KNearestNeighbors,
    LogisticRegression,
    GaussianNaiveBayes,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::DecisionTree,
        LearnerKind::KNearestNeighbors,
        LearnerKind::LogisticRegression,
        LearnerKind::GaussianNaiveBayes,
    ];
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LearnerKind::DecisionTree => "decision_tree",
            LearnerKind::KNearestNeighbors => "k_nearest_neighbors",
            LearnerKind::LogisticRegression => "logistic_regression",
            LearnerKind::GaussianNaiveBayes => "gaussian_naive_bayes",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamDomain {
    /// Integers in `lo..=hi`, uniform.
    IntRange { lo: i64, hi: i64 },
    /// Reals in `[lo, hi]`, uniform in log space.
    LogUniform { lo: f64, hi: f64 },
    Choice(Vec<String>),
}

impl ParamDomain {
    fn sample<R: Rng>(&self, rng: &mut R) -> ParamValue {
        match self {
            ParamDomain::IntRange { lo, hi } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
            ParamDomain::LogUniform { lo, hi } => {
                let v = rng.gen_range(lo.ln()..=hi.ln()).exp();
                ParamValue::Float(v.clamp(*lo, *hi))
            }
            ParamDomain::Choice(options) => {
                ParamValue::Text(options[rng.gen_range(0..options.len())].clone())
            }
        }
    }

    pub fn contains(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (ParamDomain::IntRange { lo, hi }, ParamValue::Int(v)) => (lo..=hi).contains(&v),
            (ParamDomain::LogUniform { lo, hi }, ParamValue::Float(v)) => (lo..=hi).contains(&v),
            (ParamDomain::Choice(options), ParamValue::Text(v)) => options.contains(v),
            _ => false,
        }
    }
}

/// Named parameter domains per learner, in sampling order.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterSpace {
    pub learners: BTreeMap<LearnerKind, Vec<(String, ParamDomain)>>,
}

impl Default for HyperparameterSpace {
    fn default() -> Self {
        use ParamDomain::*;
        let p = |name: &str, d: ParamDomain| (name.to_string(), d);
        let learners = BTreeMap::from([
            (
                LearnerKind::DecisionTree,
                vec![
                    p("max_depth", IntRange { lo: 1, hi: 12 }),
                    p("min_leaf", IntRange { lo: 1, hi: 20 }),
                ],
            ),
            (
                LearnerKind::KNearestNeighbors,
                vec![
                    p("k", IntRange { lo: 1, hi: 25 }),
                    p(
                        "distance",
                        Choice(vec!["euclidean".into(), "manhattan".into()]),
                    ),
                ],
            ),
            (
                LearnerKind::LogisticRegression,
                vec![
                    p("l2_strength", LogUniform { lo: 1e-4, hi: 10.0 }),
                    p("epochs", IntRange { lo: 50, hi: 500 }),
                    p("learning_rate", LogUniform { lo: 1e-3, hi: 1.0 }),
                ],
            ),
            (
                LearnerKind::GaussianNaiveBayes,
                vec![p("var_smoothing", LogUniform { lo: 1e-9, hi: 1e-3 })],
            ),
        ]);
        Self { learners }
    }
}

/// One sampled learner configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub index: usize,
    pub learner: LearnerKind,
    pub params: BTreeMap<String, ParamValue>,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(index: usize, learner: LearnerKind, seed: u64) -> Self {
        Self {
            index,
            learner,
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    fn invalid(&self, name: &str) -> TrainError {
        TrainError::InvalidParam {
            index: self.index,
            name: name.to_string(),
        }
    }

    pub fn int(&self, name: &str) -> Result<i64, TrainError> {
        match self.params.get(name) {
            Some(ParamValue::Int(v)) => Ok(*v),
            _ => Err(self.invalid(name)),
        }
    }

    pub fn float(&self, name: &str) -> Result<f64, TrainError> {
        match self.params.get(name) {
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            _ => Err(self.invalid(name)),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str, TrainError> {
        match self.params.get(name) {
            Some(ParamValue::Text(v)) => Ok(v),
            _ => Err(self.invalid(name)),
        }
    }
}

/// Draws `n` configs: learner uniform over the space, parameters uniform
/// (log-uniform where declared). Same seed, same list.
pub fn sample_configs(space: &HyperparameterSpace, n: usize, seed: u64) -> Vec<ModelConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let learners: Vec<(&LearnerKind, &Vec<(String, ParamDomain)>)> = space.learners.iter().collect();
    assert!(!learners.is_empty(), "hyperparameter space has no learners");
    (0..n)
        .map(|index| {
            let (learner, domains) = learners[rng.gen_range(0..learners.len())];
            let params = domains
                .iter()
                .map(|(name, d)| (name.clone(), d.sample(&mut rng)))
                .collect();
            ModelConfig {
                index,
                learner: *learner,
                params,
                seed: rng.gen(),
            }
        })
        .collect()
}

/// Per-feature standardization fit on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    fn fit(x: &[&[f64]]) -> Self {
        let d = x.first().map_or(0, |r| r.len());
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for j in 0..d {
                let c = row[j] - mean[j];
                var[j] += c * c;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedModel {
    Constant { class: usize },
    DecisionTree(DecisionTree),
    KNearestNeighbors(KNearestNeighbors),
    LogisticRegression(LogisticRegression),
    GaussianNaiveBayes(GaussianNaiveBayes),
}

/// A fitted learner bound to the dataset's label domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainedClassifier {
    pub config: ModelConfig,
    pub label_domain: Vec<String>,
    pub n_features: usize,
    pub n_train: usize,
    /// Set when the training rows held a single class; the model is then a
    /// constant predictor of that class.
    pub degenerate: bool,
    pub model: FittedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub label_index: usize,
    pub probabilities: Vec<f64>,
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    if total > 0.0 && total.is_finite() {
        p.iter_mut().for_each(|v| *v /= total);
    } else {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = u);
    }
    p
}

/// Trains `config` on the rows named by `train_ids`.
pub fn train(
    config: &ModelConfig,
    ds: &Dataset,
    train_ids: &BTreeSet<RowId>,
) -> Result<TrainedClassifier, TrainError> {
    let rows = train_ids
        .iter()
        .map(|id| ds.position(id).ok_or_else(|| TrainError::UnknownId(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    train_rows(config, ds, &rows)
}

/// Trains `config` on dataset rows by position. This is the single point
/// where row data reaches a learner.
pub fn train_rows(
    config: &ModelConfig,
    ds: &Dataset,
    rows: &[usize],
) -> Result<TrainedClassifier, TrainError> {
    if rows.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let x: Vec<&[f64]> = rows.iter().map(|&i| ds.rows()[i].features.as_slice()).collect();
    let y: Vec<usize> = rows
        .iter()
        .map(|&i| ds.label_index(&ds.rows()[i].label).expect("label in domain"))
        .collect();
    fit(config, ds.label_domain(), &x, &y)
}

/// Fits on an explicit feature matrix and class-index targets.
pub fn fit(
    config: &ModelConfig,
    label_domain: &[String],
    x: &[&[f64]],
    y: &[usize],
) -> Result<TrainedClassifier, TrainError> {
    if x.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let n_classes = label_domain.len();
    let n_features = x[0].len();
    let distinct: BTreeSet<usize> = y.iter().copied().collect();
    let (degenerate, model) = if distinct.len() == 1 {
        (true, FittedModel::Constant { class: y[0] })
    } else {
        let model = match config.learner {
            LearnerKind::DecisionTree => {
                let max_depth = config.int("max_depth")?.max(1) as usize;
                let min_leaf = config.int("min_leaf")?.max(1) as usize;
                FittedModel::DecisionTree(DecisionTree::fit(x, y, n_classes, max_depth, min_leaf))
            }
            LearnerKind::KNearestNeighbors => {
                let k = config.int("k")?.max(1) as usize;
                let distance = match config.text("distance")? {
                    "euclidean" => Distance::Euclidean,
                    "manhattan" => Distance::Manhattan,
                    _ => return Err(config.invalid("distance")),
                };
                FittedModel::KNearestNeighbors(KNearestNeighbors::fit(x, y, n_classes, k, distance))
            }
            LearnerKind::LogisticRegression => {
                let l2 = config.float("l2_strength")?;
                let epochs = config.int("epochs")?.max(0) as usize;
                let lr = config.float("learning_rate")?;
                FittedModel::LogisticRegression(LogisticRegression::fit(
                    x, y, n_classes, l2, epochs, lr,
                ))
            }
            LearnerKind::GaussianNaiveBayes => {
                let smoothing = config.float("var_smoothing")?;
                FittedModel::GaussianNaiveBayes(GaussianNaiveBayes::fit(x, y, n_classes, smoothing))
            }
        };
        (false, model)
    };
    Ok(TrainedClassifier {
        config: config.clone(),
        label_domain: label_domain.to_vec(),
        n_features,
        n_train: x.len(),
        degenerate,
        model,
    })
}

impl TrainedClassifier {
    /// Class probabilities over the label domain; sums to one.
    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>, TrainError> {
        if features.len() != self.n_features {
            return Err(TrainError::ArityMismatch {
                expected: self.n_features,
                got: features.len(),
            });
        }
        let c = self.label_domain.len();
        let p = match &self.model {
            FittedModel::Constant { class } => {
                let mut p = vec![0.0; c];
                p[*class] = 1.0;
                p
            }
            FittedModel::DecisionTree(t) => t.predict_proba(features),
            FittedModel::KNearestNeighbors(m) => m.predict_proba(features),
            FittedModel::LogisticRegression(m) => m.predict_proba(features),
            FittedModel::GaussianNaiveBayes(m) => m.predict_proba(features),
        };
        Ok(normalize(p))
    }

    /// Predicted class index, ties to the earlier label.
    pub fn predict_index(&self, features: &[f64]) -> Result<usize, TrainError> {
        self.predict_proba(features).map(|p| argmax(&p))
    }

    pub fn predict(&self, rows: &[DataRow]) -> Result<Vec<Prediction>, TrainError> {
        rows.iter()
            .map(|r| {
                let probabilities = self.predict_proba(&r.features)?;
                let label_index = argmax(&probabilities);
                Ok(Prediction {
                    label: self.label_domain[label_index].clone(),
                    label_index,
                    probabilities,
                })
            })
            .collect()
    }

    /// JSON model card: learner, parameters and fitted state.
    pub fn model_card(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("classifier serializes")
    }
}

pub fn predict(clf: &TrainedClassifier, rows: &[DataRow]) -> Result<Vec<Prediction>, TrainError> {
    clf.predict(rows)
}
