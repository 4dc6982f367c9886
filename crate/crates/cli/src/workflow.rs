//! Engine workflows shared by the command line and the HTTP service, so both
//! produce identical results for identical inputs.

use std::path::Path;

use cactus_core::objective::{serialize_objective_function, Issue};
use cactus_core::scorer::{retrain_best, select_model_with, SolverOptions};
use cactus_core::{
    detect_conflicts, load_dataset, make_split, parse_objective_function, rank_conflicts, validate_function,
    Conflict, DataSplit, Dataset, ObjectiveFunction, ObjectiveKey, RowId, SelectionResult, TrainedClassifier,
};
use serde::{Deserialize, Serialize};

use crate::ApiError;

pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.2;

/// How a dataset is split into train and validation rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitParams {
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self {
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            seed: 0,
        }
    }
}

impl SplitParams {
    pub fn apply(&self, ds: &Dataset) -> Result<DataSplit, ApiError> {
        Ok(make_split(ds, self.validation_fraction, self.seed)?)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> ApiError {
    ApiError::new("IoError", format!("{}: {e}", path.display()))
}

/// Loads a CSV dataset named after its file stem.
pub fn read_dataset(path: &Path) -> Result<Dataset, ApiError> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    Ok(load_dataset(std::io::BufReader::new(file), name)?)
}

pub fn read_function(path: &Path) -> Result<ObjectiveFunction, ApiError> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(parse_objective_function(&bytes)?)
}

/// Fails with `ValidationFailed` (the report as context) when `of` has
/// validation errors; returns the warnings otherwise.
pub fn check_function(of: &ObjectiveFunction, ds: &Dataset, split: &DataSplit) -> Result<Vec<Issue>, ApiError> {
    let report = validate_function(of, ds, split);
    if !report.is_ok() {
        let summary: Vec<String> = report
            .errors
            .iter()
            .map(|i| format!("{:?}: {}", i.code, i.message))
            .collect();
        return Err(ApiError::new("ValidationFailed", summary.join("; ")).with_context(&report));
    }
    Ok(report.warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictSummary {
    pub hash: String,
    pub left: usize,
    pub right: usize,
    pub left_key: ObjectiveKey,
    pub right_key: ObjectiveKey,
    pub severity: usize,
    pub conflicted_ids: Vec<RowId>,
}

impl ConflictSummary {
    pub fn new(of: &ObjectiveFunction, c: &Conflict) -> Self {
        Self {
            hash: c.hash(of),
            left: c.left,
            right: c.right,
            left_key: of.objectives[c.left].key(),
            right_key: of.objectives[c.right].key(),
            severity: c.severity,
            conflicted_ids: c.conflicted_ids.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintReport {
    pub function_id: String,
    pub dataset: String,
    pub conflicts: Vec<ConflictSummary>,
    pub warnings: Vec<Issue>,
}

pub fn lint(function_path: &Path, data_path: &Path, split: &SplitParams) -> Result<LintReport, ApiError> {
    let of = read_function(function_path)?;
    let ds = read_dataset(data_path)?;
    let split = split.apply(&ds)?;
    let warnings = check_function(&of, &ds, &split)?;
    let conflicts = rank_conflicts(&detect_conflicts(&of))
        .iter()
        .map(|c| ConflictSummary::new(&of, c))
        .collect();
    Ok(LintReport {
        function_id: of.id.clone(),
        dataset: ds.name().to_string(),
        conflicts,
        warnings,
    })
}

/// Runs model selection and refits the winner.
pub fn run_selection(
    of: &ObjectiveFunction,
    ds: &Dataset,
    split: &DataSplit,
    max_samples: Option<usize>,
) -> Result<(SelectionResult, TrainedClassifier), ApiError> {
    let options = SolverOptions {
        max_samples,
        ..Default::default()
    };
    let result = select_model_with(of, ds, split, &options, None)?;
    let model = retrain_best(of, ds, split, &result)?;
    Ok((result, model))
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub split: SplitParams,
    /// Overrides the function's sampling seed.
    pub seed: Option<u64>,
    pub max_samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub function: ObjectiveFunction,
    pub result: SelectionResult,
    pub model: TrainedClassifier,
}

pub const SELECTION_FILE: &str = "selection.json";
pub const MODEL_CARD_FILE: &str = "model_card.json";
pub const FUNCTION_FILE: &str = "function.json";

fn pretty(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

/// Trains from files and writes the artifacts into `out_dir`. Output bytes
/// depend only on the inputs.
pub fn train(
    function_path: &Path,
    data_path: &Path,
    out_dir: &Path,
    options: &TrainOptions,
) -> Result<TrainOutcome, ApiError> {
    let mut of = read_function(function_path)?;
    if let Some(seed) = options.seed {
        of.seed = seed;
    }
    let ds = read_dataset(data_path)?;
    let split = options.split.apply(&ds)?;
    check_function(&of, &ds, &split)?;
    let (result, model) = run_selection(&of, &ds, &split, options.max_samples)?;

    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let write = |name: &str, bytes: Vec<u8>| {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_error(&path, e))
    };
    write(SELECTION_FILE, pretty(&result))?;
    write(MODEL_CARD_FILE, pretty(&model.model_card()))?;
    write(FUNCTION_FILE, serialize_objective_function(&of))?;
    Ok(TrainOutcome {
        function: of,
        result,
        model,
    })
}
