//! Objective functions: schema, canonical JSON form and structural validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::data::{DataSplit, Dataset, RowId};

/// Sample count used when a function file does not set `n_samples`.
pub const DEFAULT_N_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Candidate,
    Similarity,
    Ignore,
    Critical,
    TrainAccuracy,
    ValidationAccuracy,
    F1Macro,
    PrecisionMacro,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 8] = [
        ObjectiveKind::Candidate,
        ObjectiveKind::Similarity,
        ObjectiveKind::Ignore,
        ObjectiveKind::Critical,
        ObjectiveKind::TrainAccuracy,
        ObjectiveKind::ValidationAccuracy,
        ObjectiveKind::F1Macro,
        ObjectiveKind::PrecisionMacro,
    ];

    /// Instance-set kinds carry row ids; metric kinds do not.
    pub fn is_instance_set(self) -> bool {
        matches!(
            self,
            ObjectiveKind::Candidate
                | ObjectiveKind::Similarity
                | ObjectiveKind::Ignore
                | ObjectiveKind::Critical
        )
    }

    pub fn is_metric(self) -> bool {
        !self.is_instance_set()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Candidate => "candidate",
            ObjectiveKind::Similarity => "similarity",
            ObjectiveKind::Ignore => "ignore",
            ObjectiveKind::Critical => "critical",
            ObjectiveKind::TrainAccuracy => "train_accuracy",
            ObjectiveKind::ValidationAccuracy => "validation_accuracy",
            ObjectiveKind::F1Macro => "f1_macro",
            ObjectiveKind::PrecisionMacro => "precision_macro",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectiveKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Identity of an objective across function versions: its kind and label.
///
/// Rendered as `kind` or `kind:label`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectiveKey {
    pub kind: ObjectiveKind,
    pub label: Option<String>,
}

impl fmt::Display for ObjectiveKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(l) => write!(f, "{}:{}", self.kind, l),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl FromStr for ObjectiveKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, label) = match s.split_once(':') {
            Some((k, l)) => (k, Some(l.to_string())),
            None => (s, None),
        };
        Ok(ObjectiveKey {
            kind: kind.parse()?,
            label,
        })
    }
}

impl Serialize for ObjectiveKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ObjectiveKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|k| serde::de::Error::custom(format!("unknown objective kind `{k}`")))
    }
}

/// One weighted term of an objective function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub label: Option<String>,
    pub ids: BTreeSet<RowId>,
    pub weight: f64,
}

impl ObjectiveSpec {
    pub fn key(&self) -> ObjectiveKey {
        ObjectiveKey {
            kind: self.kind,
            label: self.label.clone(),
        }
    }

    pub fn metric(kind: ObjectiveKind, weight: f64) -> Self {
        Self {
            kind,
            label: None,
            ids: BTreeSet::new(),
            weight,
        }
    }

    pub fn instance_set<I, S>(kind: ObjectiveKind, label: Option<&str>, ids: I, weight: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            kind,
            label: label.map(str::to_string),
            ids: ids.into_iter().map(Into::into).collect(),
            weight,
        }
    }

    /// Checks the per-objective invariants. `index` only feeds error context.
    pub fn check(&self, index: usize) -> Result<(), ParseError> {
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(ParseError::WeightOutOfRange {
                index,
                weight: self.weight,
            });
        }
        let path = format!("$.objectives[{index}]");
        match self.kind {
            ObjectiveKind::Candidate if self.label.is_none() => Err(ParseError::LabelRequired {
                index,
                kind: self.kind,
            }),
            ObjectiveKind::Ignore | ObjectiveKind::Critical if self.label.is_some() => {
                Err(ParseError::Schema {
                    path: format!("{path}.label"),
                    message: format!("{} objectives carry no label", self.kind),
                })
            }
            k if k.is_instance_set() && self.ids.is_empty() => Err(ParseError::Schema {
                path: format!("{path}.ids"),
                message: format!("{k} objectives need at least one id"),
            }),
            k if k.is_metric() && self.label.is_some() => Err(ParseError::Schema {
                path: format!("{path}.label"),
                message: format!("metric objective {k} carries no label"),
            }),
            k if k.is_metric() && !self.ids.is_empty() => Err(ParseError::Schema {
                path: format!("{path}.ids"),
                message: format!("metric objective {k} carries no ids"),
            }),
            _ => Ok(()),
        }
    }
}

/// A weighted linear combination of objectives plus solver settings.
///
/// Serializes to the canonical document layout: fixed key order and sorted
/// id lists, so equal functions serialize to equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value")]
pub struct ObjectiveFunction {
    pub id: String,
    #[serde(rename = "dataset")]
    pub dataset_ref: String,
    pub seed: u64,
    pub n_samples: usize,
    pub objectives: Vec<ObjectiveSpec>,
}

impl ObjectiveFunction {
    pub fn new(id: impl Into<String>, dataset_ref: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            dataset_ref: dataset_ref.into(),
            seed: 0,
            n_samples: DEFAULT_N_SAMPLES,
            objectives: Vec::new(),
        }
    }

    pub fn with_objective(mut self, spec: ObjectiveSpec) -> Self {
        self.objectives.push(spec);
        self
    }

    pub fn total_weight(&self) -> f64 {
        self.objectives.iter().map(|o| o.weight).sum()
    }

    pub fn find(&self, key: &ObjectiveKey) -> Option<usize> {
        self.objectives.iter().position(|o| &o.key() == key)
    }

    pub fn keys(&self) -> Vec<ObjectiveKey> {
        self.objectives.iter().map(ObjectiveSpec::key).collect()
    }

    /// Checks every per-objective invariant in file order.
    pub fn check(&self) -> Result<(), ParseError> {
        if self.n_samples == 0 {
            return Err(ParseError::Schema {
                path: "$.n_samples".into(),
                message: "must be positive".into(),
            });
        }
        self.objectives
            .iter()
            .enumerate()
            .try_for_each(|(i, o)| o.check(i))
    }
}

impl TryFrom<Value> for ObjectiveFunction {
    type Error = ParseError;

    fn try_from(value: Value) -> Result<Self, Self::Error> {
        from_value(&value)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("invalid json: {0}")]
    Json(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unknown objective kind `{kind}` at {path}")]
    UnknownKind { path: String, kind: String },
    #[error("objective {index}: weight {weight} is outside [0, 1]")]
    WeightOutOfRange { index: usize, weight: f64 },
    #[error("objective {index}: {kind} objectives require a label")]
    LabelRequired { index: usize, kind: ObjectiveKind },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Json(_) | ParseError::Schema { .. } => "SchemaError",
            ParseError::UnknownKind { .. } => "UnknownKind",
            ParseError::WeightOutOfRange { .. } => "WeightOutOfRange",
            ParseError::LabelRequired { .. } => "LabelRequired",
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn string_field(obj: &serde_json::Map<String, Value>, key: &str) -> Result<String, ParseError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(schema(format!("$.{key}"), "expected a string")),
        None => Err(schema(format!("$.{key}"), "missing required field")),
    }
}

fn uint_field(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    default: u64,
) -> Result<u64, ParseError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| schema(format!("$.{key}"), "expected an unsigned integer")),
    }
}

fn objective_from_value(index: usize, value: &Value) -> Result<ObjectiveSpec, ParseError> {
    let path = format!("$.objectives[{index}]");
    let obj = value
        .as_object()
        .ok_or_else(|| schema(&path, "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "kind" | "label" | "ids" | "weight") {
            return Err(schema(format!("{path}.{key}"), "unknown field"));
        }
    }
    let kind = match obj.get("kind") {
        Some(Value::String(s)) => s.parse::<ObjectiveKind>().map_err(|kind| {
            ParseError::UnknownKind {
                path: format!("{path}.kind"),
                kind,
            }
        })?,
        Some(_) => return Err(schema(format!("{path}.kind"), "expected a string")),
        None => return Err(schema(format!("{path}.kind"), "missing required field")),
    };
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(schema(format!("{path}.label"), "expected a string or null")),
    };
    let ids = match obj.get("ids") {
        None | Some(Value::Null) => BTreeSet::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(j, v)| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(schema(format!("{path}.ids[{j}]"), "expected a string id")),
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(schema(format!("{path}.ids"), "expected an array")),
    };
    let weight = match obj.get("weight") {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| schema(format!("{path}.weight"), "expected a number"))?,
        None => return Err(schema(format!("{path}.weight"), "missing required field")),
    };
    let spec = ObjectiveSpec {
        kind,
        label,
        ids,
        weight,
    };
    spec.check(index)?;
    Ok(spec)
}

fn from_value(value: &Value) -> Result<ObjectiveFunction, ParseError> {
    let obj = value
        .as_object()
        .ok_or_else(|| schema("$", "expected an object"))?;
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "id" | "dataset" | "seed" | "n_samples" | "objectives"
        ) {
            return Err(schema(format!("$.{key}"), "unknown field"));
        }
    }
    let objectives = match obj.get("objectives") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| objective_from_value(i, v))
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(schema("$.objectives", "expected an array")),
        None => return Err(schema("$.objectives", "missing required field")),
    };
    let f = ObjectiveFunction {
        id: string_field(obj, "id")?,
        dataset_ref: string_field(obj, "dataset")?,
        seed: uint_field(obj, "seed", 0)?,
        n_samples: uint_field(obj, "n_samples", DEFAULT_N_SAMPLES as u64)? as usize,
        objectives,
    };
    f.check()?;
    Ok(f)
}

/// Parses an objective-function document, applying defaults for `seed` (0)
/// and `n_samples` (200).
pub fn parse_objective_function(source: &[u8]) -> Result<ObjectiveFunction, ParseError> {
    let value: Value =
        serde_json::from_slice(source).map_err(|e| ParseError::Json(e.to_string()))?;
    from_value(&value)
}

/// Canonical serialized form: pretty JSON, fixed key order, sorted ids and a
/// trailing newline.
pub fn serialize_objective_function(of: &ObjectiveFunction) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(of).expect("objective function serializes");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueCode {
    UnknownId,
    IdNotInTrainSplit,
    LabelNotInDomain,
    DuplicateObjective,
    InvalidObjective,
    AllZeroWeights,
    LabelContradiction,
    DatasetMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
    /// Objective index the issue refers to, when there is one.
    pub objective: Option<usize>,
    /// Offending row ids (sorted), when there are any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ids: Vec<RowId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|i| i.code == code)
    }

    pub fn has_warning(&self, code: IssueCode) -> bool {
        self.warnings.iter().any(|i| i.code == code)
    }
}

/// Cross-checks a function against a dataset and split.
///
/// Errors block conflict detection and training; warnings are advisory.
pub fn validate_function(
    of: &ObjectiveFunction,
    ds: &Dataset,
    split: &DataSplit,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let issue = |code, message: String, objective, ids: Vec<RowId>| Issue {
        code,
        message,
        objective,
        ids,
    };

    if of.dataset_ref != ds.name() {
        report.warnings.push(issue(
            IssueCode::DatasetMismatch,
            format!(
                "function references dataset `{}`, checked against `{}`",
                of.dataset_ref,
                ds.name()
            ),
            None,
            vec![],
        ));
    }

    let mut seen: BTreeMap<ObjectiveKey, usize> = BTreeMap::new();
    for (i, o) in of.objectives.iter().enumerate() {
        if let Err(e) = o.check(i) {
            report
                .errors
                .push(issue(IssueCode::InvalidObjective, e.to_string(), Some(i), vec![]));
        }
        if let Some(first) = seen.insert(o.key(), i) {
            report.errors.push(issue(
                IssueCode::DuplicateObjective,
                format!("objective {i} repeats `{}` from objective {first}", o.key()),
                Some(i),
                vec![],
            ));
        }
        if let Some(label) = &o.label {
            if ds.label_index(label).is_none() {
                report.errors.push(issue(
                    IssueCode::LabelNotInDomain,
                    format!("label `{label}` does not occur in dataset `{}`", ds.name()),
                    Some(i),
                    vec![],
                ));
            }
        }
        let unknown: Vec<RowId> = o.ids.iter().filter(|id| !ds.contains(id)).cloned().collect();
        if !unknown.is_empty() {
            report.errors.push(issue(
                IssueCode::UnknownId,
                format!("{} id(s) are not in the dataset", unknown.len()),
                Some(i),
                unknown,
            ));
        }
        let outside: Vec<RowId> = o
            .ids
            .iter()
            .filter(|id| ds.contains(id) && !split.is_train(id))
            .cloned()
            .collect();
        if !outside.is_empty() {
            report.errors.push(issue(
                IssueCode::IdNotInTrainSplit,
                format!("{} id(s) are outside the train split", outside.len()),
                Some(i),
                outside,
            ));
        }
        if o.kind == ObjectiveKind::Candidate {
            if let Some(label) = &o.label {
                let contradicting: Vec<RowId> = o
                    .ids
                    .iter()
                    .filter(|id| ds.row(id).is_some_and(|r| &r.label != label))
                    .cloned()
                    .collect();
                if !contradicting.is_empty() {
                    report.warnings.push(issue(
                        IssueCode::LabelContradiction,
                        format!(
                            "{} candidate row(s) for `{label}` carry a different ground-truth label",
                            contradicting.len()
                        ),
                        Some(i),
                        contradicting,
                    ));
                }
            }
        }
    }

    if !of.objectives.is_empty() && of.objectives.iter().all(|o| o.weight == 0.0) {
        report.warnings.push(issue(
            IssueCode::AllZeroWeights,
            "every objective weight is zero; training will be refused".into(),
            None,
            vec![],
        ));
    }
    report
}
