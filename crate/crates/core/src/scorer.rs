//! Objective scoring, weighted aggregation and the sample-train-select loop.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::data::{DataSplit, Dataset, RowId};
use crate::objective::{ObjectiveFunction, ObjectiveKind, ObjectiveSpec};
use crate::zoo::{sample_configs, train_rows, HyperparameterSpace, ModelConfig, TrainError, TrainedClassifier};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("ignore objectives cover the whole train split")]
    EmptyEffectiveTrainSet,
    #[error("objective {objective} has no rows to score")]
    EmptyObjectiveSet { objective: usize },
    #[error("all objective weights are zero")]
    AllZeroWeights,
    #[error("{scores} scores for {objectives} objectives")]
    LengthMismatch { scores: usize, objectives: usize },
    #[error("unknown row id `{0}`")]
    UnknownId(RowId),
    #[error(transparent)]
    Train(#[from] TrainError),
}

impl ScoreError {
    pub fn code(&self) -> &'static str {
        match self {
            ScoreError::EmptyEffectiveTrainSet => "EmptyEffectiveTrainSet",
            ScoreError::EmptyObjectiveSet { .. } => "EmptyObjectiveSet",
            ScoreError::AllZeroWeights => "AllZeroWeights",
            ScoreError::LengthMismatch { .. } => "LengthMismatch",
            ScoreError::UnknownId(_) => "UnknownId",
            ScoreError::Train(e) => e.code(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Precondition(ScoreError),
    #[error("config {index}: {source}")]
    Config {
        index: usize,
        #[source]
        source: ScoreError,
    },
}

impl SolverError {
    pub fn code(&self) -> &'static str {
        match self {
            SolverError::Precondition(e) | SolverError::Config { source: e, .. } => e.code(),
        }
    }
}

/// Scores scaled to 0..100 and rounded to two decimals for display.
pub fn display_value(x: f64) -> f64 {
    (x * 10_000.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ObjectiveScore {
    pub objective: usize,
    pub score: f64,
    pub support: usize,
}

impl Serialize for ObjectiveScore {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ObjectiveScore", 4)?;
        st.serialize_field("objective", &self.objective)?;
        st.serialize_field("score", &self.score)?;
        st.serialize_field("display", &display_value(self.score))?;
        st.serialize_field("support", &self.support)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ModelEvaluation {
    pub config: ModelConfig,
    pub per_objective: Vec<ObjectiveScore>,
    pub aggregate: f64,
    pub validation_accuracy: f64,
}

impl Serialize for ModelEvaluation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ModelEvaluation", 6)?;
        st.serialize_field("config", &self.config)?;
        st.serialize_field("per_objective", &self.per_objective)?;
        st.serialize_field("aggregate", &self.aggregate)?;
        st.serialize_field("aggregate_display", &display_value(self.aggregate))?;
        st.serialize_field("validation_accuracy", &self.validation_accuracy)?;
        st.serialize_field(
            "validation_accuracy_display",
            &display_value(self.validation_accuracy),
        )?;
        st.end()
    }
}

impl ModelEvaluation {
    pub fn score_of(&self, objective: usize) -> Option<f64> {
        self.per_objective
            .iter()
            .find(|s| s.objective == objective)
            .map(|s| s.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best: ModelEvaluation,
    /// Every evaluation, in config-index order.
    pub all: Vec<ModelEvaluation>,
}

/// Train-split ids with every Ignore objective's ids removed.
pub fn effective_train_ids(
    of: &ObjectiveFunction,
    split: &DataSplit,
) -> Result<BTreeSet<RowId>, ScoreError> {
    let ignored: BTreeSet<&RowId> = of
        .objectives
        .iter()
        .filter(|o| o.kind == ObjectiveKind::Ignore)
        .flat_map(|o| o.ids.iter())
        .collect();
    let ids: BTreeSet<RowId> = split
        .train_ids
        .iter()
        .filter(|id| !ignored.contains(id))
        .cloned()
        .collect();
    if ids.is_empty() {
        return Err(ScoreError::EmptyEffectiveTrainSet);
    }
    Ok(ids)
}

/// Dataset, split and the effective train set of one function version.
#[derive(Debug, Clone)]
pub struct ScoringContext<'a> {
    pub dataset: &'a Dataset,
    pub split: &'a DataSplit,
    pub effective_train_ids: BTreeSet<RowId>,
}

impl<'a> ScoringContext<'a> {
    pub fn new(
        of: &ObjectiveFunction,
        dataset: &'a Dataset,
        split: &'a DataSplit,
    ) -> Result<Self, ScoreError> {
        Ok(Self {
            dataset,
            split,
            effective_train_ids: effective_train_ids(of, split)?,
        })
    }

    fn positions<'b, I>(&self, ids: I) -> Result<Vec<usize>, ScoreError>
    where
        I: IntoIterator<Item = &'b RowId>,
    {
        ids.into_iter()
            .map(|id| {
                self.dataset
                    .position(id)
                    .ok_or_else(|| ScoreError::UnknownId(id.clone()))
            })
            .collect()
    }

    fn truth(&self, pos: usize) -> usize {
        self.dataset
            .label_index(&self.dataset.rows()[pos].label)
            .expect("label in domain")
    }
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Scores one objective given a prediction lookup by dataset position.
fn score_with<F>(
    index: usize,
    obj: &ObjectiveSpec,
    ctx: &ScoringContext<'_>,
    predicted: F,
) -> Result<ObjectiveScore, ScoreError>
where
    F: Fn(usize) -> Result<usize, TrainError>,
{
    let empty = || ScoreError::EmptyObjectiveSet { objective: index };
    let done = |score: f64, support: usize| {
        Ok(ObjectiveScore {
            objective: index,
            score,
            support,
        })
    };
    let accuracy = |rows: &[usize]| -> Result<f64, ScoreError> {
        let mut hits = 0;
        for &p in rows {
            if predicted(p)? == ctx.truth(p) {
                hits += 1;
            }
        }
        Ok(fraction(hits, rows.len()))
    };
    let label = obj.label.as_deref().map(|l| ctx.dataset.label_index(l));

    match obj.kind {
        ObjectiveKind::Ignore => done(1.0, obj.ids.len()),
        ObjectiveKind::Candidate | ObjectiveKind::Similarity => {
            let rows = ctx.positions(&obj.ids)?;
            if rows.is_empty() {
                return Err(empty());
            }
            match label {
                Some(target) => {
                    let mut hits = 0;
                    for &p in &rows {
                        if Some(predicted(p)?) == target {
                            hits += 1;
                        }
                    }
                    done(fraction(hits, rows.len()), rows.len())
                }
                None => {
                    let mut counts = vec![0usize; ctx.dataset.label_domain().len()];
                    for &p in &rows {
                        counts[predicted(p)?] += 1;
                    }
                    let top = counts.iter().copied().max().unwrap_or(0);
                    done(fraction(top, rows.len()), rows.len())
                }
            }
        }
        ObjectiveKind::Critical => {
            let rows = ctx.positions(&obj.ids)?;
            if rows.is_empty() {
                return Err(empty());
            }
            done(accuracy(&rows)?, rows.len())
        }
        ObjectiveKind::TrainAccuracy => {
            let rows = ctx.positions(&ctx.effective_train_ids)?;
            if rows.is_empty() {
                return Err(empty());
            }
            done(accuracy(&rows)?, rows.len())
        }
        ObjectiveKind::ValidationAccuracy => {
            let rows = ctx.positions(&ctx.split.validation_ids)?;
            if rows.is_empty() {
                return Err(empty());
            }
            done(accuracy(&rows)?, rows.len())
        }
        ObjectiveKind::F1Macro | ObjectiveKind::PrecisionMacro => {
            let rows = ctx.positions(&ctx.split.validation_ids)?;
            if rows.is_empty() {
                return Err(empty());
            }
            let c = ctx.dataset.label_domain().len();
            let mut tp = vec![0usize; c];
            let mut predicted_count = vec![0usize; c];
            let mut actual_count = vec![0usize; c];
            for &p in &rows {
                let (pred, truth) = (predicted(p)?, ctx.truth(p));
                predicted_count[pred] += 1;
                actual_count[truth] += 1;
                if pred == truth {
                    tp[truth] += 1;
                }
            }
            let per_class = (0..c).map(|k| {
                let precision = ratio_or_zero(tp[k] as f64, predicted_count[k] as f64);
                if obj.kind == ObjectiveKind::PrecisionMacro {
                    return precision;
                }
                let recall = ratio_or_zero(tp[k] as f64, actual_count[k] as f64);
                ratio_or_zero(2.0 * precision * recall, precision + recall)
            });
            done(per_class.sum::<f64>() / c as f64, rows.len())
        }
    }
}

/// Scores a single objective of a trained classifier.
pub fn score_objective(
    clf: &TrainedClassifier,
    index: usize,
    obj: &ObjectiveSpec,
    ctx: &ScoringContext<'_>,
) -> Result<ObjectiveScore, ScoreError> {
    let rows = ctx.dataset.rows();
    score_with(index, obj, ctx, |p| clf.predict_index(&rows[p].features))
}

/// `sum(w_i * s_i) / sum(w_i)`, kept inside the range of the weighted scores.
pub fn aggregate_score(of: &ObjectiveFunction, scores: &[ObjectiveScore]) -> Result<f64, ScoreError> {
    if scores.len() != of.objectives.len() {
        return Err(ScoreError::LengthMismatch {
            scores: scores.len(),
            objectives: of.objectives.len(),
        });
    }
    let total = of.total_weight();
    if total <= 0.0 {
        return Err(ScoreError::AllZeroWeights);
    }
    let mut acc = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in scores {
        let w = of.objectives[s.objective].weight;
        acc += w * s.score;
        if w > 0.0 {
            lo = lo.min(s.score);
            hi = hi.max(s.score);
        }
    }
    Ok((acc / total).clamp(lo, hi))
}

/// Index into `evals` of the highest aggregate; the lowest index wins ties.
pub fn best_index(evals: &[ModelEvaluation]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in evals.iter().enumerate() {
        if best.map_or(true, |b| e.aggregate > evals[b].aggregate) {
            best = Some(i);
        }
    }
    best
}

/// Re-aggregates already-scored models under `of`'s weights and selects.
///
/// Only valid when `of` differs from the scored version in weights alone.
pub fn select_from_pool(
    of: &ObjectiveFunction,
    pool: &[ModelEvaluation],
) -> Result<SelectionResult, ScoreError> {
    let all = pool
        .iter()
        .map(|e| {
            Ok(ModelEvaluation {
                aggregate: aggregate_score(of, &e.per_objective)?,
                ..e.clone()
            })
        })
        .collect::<Result<Vec<_>, ScoreError>>()?;
    let best = best_index(&all).ok_or(ScoreError::EmptyObjectiveSet { objective: 0 })?;
    Ok(SelectionResult {
        best: all[best].clone(),
        all,
    })
}

/// Tunables for [`select_model_with`].
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub space: HyperparameterSpace,
    /// Upper bound on sampled configs regardless of the function's setting.
    pub max_samples: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            space: HyperparameterSpace::default(),
            max_samples: None,
        }
    }
}

/// Receives every training set handed to a learner, as dataset positions.
pub type TrainingObserver<'o> = dyn Fn(&ModelConfig, &[usize]) + Sync + 'o;

/// Trains and scores one config against every objective.
pub fn evaluate_config(
    config: &ModelConfig,
    of: &ObjectiveFunction,
    ctx: &ScoringContext<'_>,
    observer: Option<&TrainingObserver<'_>>,
) -> Result<(TrainedClassifier, ModelEvaluation), ScoreError> {
    let train_rows_pos = ctx.positions(&ctx.effective_train_ids)?;
    if let Some(observe) = observer {
        observe(config, &train_rows_pos);
    }
    let clf = train_rows(config, ctx.dataset, &train_rows_pos)?;
    let preds = ctx
        .dataset
        .rows()
        .iter()
        .map(|r| clf.predict_index(&r.features))
        .collect::<Result<Vec<usize>, TrainError>>()?;
    let lookup = |p: usize| Ok(preds[p]);
    let per_objective = of
        .objectives
        .iter()
        .enumerate()
        .map(|(i, o)| score_with(i, o, ctx, lookup))
        .collect::<Result<Vec<_>, _>>()?;
    let validation = ObjectiveSpec::metric(ObjectiveKind::ValidationAccuracy, 1.0);
    let validation_accuracy = score_with(usize::MAX, &validation, ctx, lookup)?.score;
    let aggregate = aggregate_score(of, &per_objective)?;
    Ok((
        clf,
        ModelEvaluation {
            config: config.clone(),
            per_objective,
            aggregate,
            validation_accuracy,
        },
    ))
}

/// Samples `of.n_samples` configs, trains each on the effective train ids,
/// scores every objective and keeps the highest aggregate.
pub fn select_model(
    of: &ObjectiveFunction,
    ds: &Dataset,
    split: &DataSplit,
) -> Result<SelectionResult, SolverError> {
    select_model_with(of, ds, split, &SolverOptions::default(), None)
}

pub fn select_model_with(
    of: &ObjectiveFunction,
    ds: &Dataset,
    split: &DataSplit,
    options: &SolverOptions,
    observer: Option<&TrainingObserver<'_>>,
) -> Result<SelectionResult, SolverError> {
    if of.total_weight() <= 0.0 {
        return Err(SolverError::Precondition(ScoreError::AllZeroWeights));
    }
    let ctx = ScoringContext::new(of, ds, split).map_err(SolverError::Precondition)?;
    let n = options
        .max_samples
        .map_or(of.n_samples, |cap| of.n_samples.min(cap))
        .max(1);
    let configs = sample_configs(&options.space, n, of.seed);
    // Collected in config order so the outcome does not depend on scheduling.
    let results: Vec<Result<ModelEvaluation, ScoreError>> = configs
        .par_iter()
        .map(|c| evaluate_config(c, of, &ctx, observer).map(|(_, e)| e))
        .collect();
    let mut all = Vec::with_capacity(results.len());
    for (config, r) in configs.iter().zip(results) {
        all.push(r.map_err(|source| SolverError::Config {
            index: config.index,
            source,
        })?);
    }
    let best = best_index(&all).expect("at least one config");
    Ok(SelectionResult {
        best: all[best].clone(),
        all,
    })
}

/// Retrains the selected config so its fitted state can be exported.
pub fn retrain_best(
    of: &ObjectiveFunction,
    ds: &Dataset,
    split: &DataSplit,
    result: &SelectionResult,
) -> Result<TrainedClassifier, ScoreError> {
    let ctx = ScoringContext::new(of, ds, split)?;
    evaluate_config(&result.best.config, of, &ctx, None).map(|(clf, _)| clf)
}
