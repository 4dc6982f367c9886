//! Engine for detecting and resolving conflicts in multi-objective objective
//! functions used to select classifiers.
//!
//! An objective function is a weighted list of objectives over a tabular
//! dataset. Instance-set objectives (candidate, similarity, ignore, critical)
//! name training rows; metric objectives score a model on the whole train or
//! validation split. The engine
//!
//! * parses and validates objective functions ([`objective`]),
//! * finds contradictory objective pairs before any model is trained and
//!   applies resolutions ([`conflict`]),
//! * explains conflicts with distribution statistics ([`stats`]),
//! * samples, trains and scores classifiers and selects the best one under
//!   the weighted objective ([`zoo`], [`scorer`]),
//! * recommends weights from past iterations ([`recommender`]) and keeps the
//!   version gallery ([`history`]).

pub mod conflict;
pub mod data;
mod error;
pub mod history;
pub mod objective;
pub mod recommender;
pub mod scorer;
pub mod stats;
pub mod synth;
pub mod zoo;

pub use conflict::{
    conflict_eligible, detect_conflicts, rank_conflicts, resolve_conflict, Conflict,
    ConflictReport, Resolution,
};
pub use data::{load_dataset, make_split, DataRow, DataSplit, Dataset, RowId};
pub use error::Error;
pub use history::{load_session, persist_session, GalleryEntry, Session};
pub use objective::{
    parse_objective_function, serialize_objective_function, validate_function, ObjectiveFunction,
    ObjectiveKey, ObjectiveKind, ObjectiveSpec, ValidationReport,
};
pub use recommender::{recommend_weights, IterationRecord, WeightRecommendation};
pub use scorer::{
    aggregate_score, effective_train_ids, score_objective, select_model, ModelEvaluation,
    ObjectiveScore, ScoringContext, SelectionResult,
};
pub use stats::{
    distribution_summary, feature_plot_data, standardize, top_variant_attributes, variance_bars,
    StandardizedView,
};
pub use zoo::{predict, sample_configs, train, HyperparameterSpace, LearnerKind, ModelConfig, TrainedClassifier};
