//! Session state: the objective-function gallery, revert and persistence.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::data::DataSplit;
use crate::objective::ObjectiveFunction;
use crate::recommender::IterationRecord;
use crate::scorer::{ObjectiveScore, SelectionResult};
use crate::zoo::ModelConfig;

/// Session file schema version.
pub const SESSION_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("gallery index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("session file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt session: {0}")]
    CorruptSession(String),
}

impl HistoryError {
    pub fn code(&self) -> &'static str {
        match self {
            HistoryError::IndexOutOfRange { .. } => "IndexOutOfRange",
            HistoryError::Io { .. } => "IoError",
            HistoryError::CorruptSession(_) => "CorruptSession",
        }
    }
}

/// What the gallery keeps of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub best_config: ModelConfig,
    pub aggregate: f64,
    pub validation_accuracy: f64,
    pub per_objective: Vec<ObjectiveScore>,
}

impl From<&SelectionResult> for SelectionSummary {
    fn from(r: &SelectionResult) -> Self {
        Self {
            best_config: r.best.config.clone(),
            aggregate: r.best.aggregate,
            validation_accuracy: r.best.validation_accuracy,
            per_objective: r.best.per_objective.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub index: usize,
    pub function: ObjectiveFunction,
    pub summary: SelectionSummary,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Validation accuracy strictly above the previous entry's.
    pub improved: bool,
}

impl GalleryEntry {
    /// Recommender view of this iteration.
    pub fn record(&self) -> IterationRecord {
        let mut weights = std::collections::BTreeMap::new();
        let mut scores = std::collections::BTreeMap::new();
        for s in &self.summary.per_objective {
            if let Some(o) = self.function.objectives.get(s.objective) {
                weights.insert(o.key(), o.weight);
                scores.insert(o.key(), s.score);
            }
        }
        IterationRecord {
            iteration: self.index,
            weights,
            scores,
            validation_accuracy: self.summary.validation_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub dataset_ref: String,
    pub split: DataSplit,
    gallery: Vec<GalleryEntry>,
    pub current: ObjectiveFunction,
    pub recommender_seed: u64,
}

#[derive(Serialize)]
struct SessionFileOut<'a> {
    version: u64,
    #[serde(flatten)]
    session: &'a Session,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        dataset_ref: impl Into<String>,
        split: DataSplit,
        current: ObjectiveFunction,
        recommender_seed: u64,
    ) -> Self {
        Self {
            id: id.into(),
            dataset_ref: dataset_ref.into(),
            split,
            gallery: Vec::new(),
            current,
            recommender_seed,
        }
    }

    /// Append-only; no method removes entries.
    pub fn gallery(&self) -> &[GalleryEntry] {
        &self.gallery
    }

    pub fn history(&self) -> Vec<IterationRecord> {
        self.gallery.iter().map(GalleryEntry::record).collect()
    }

    /// Records `of` and the selection it produced as the next gallery entry.
    pub fn snapshot(&mut self, of: &ObjectiveFunction, result: &SelectionResult) -> &GalleryEntry {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.snapshot_at(of, result, now)
    }

    pub fn snapshot_at(
        &mut self,
        of: &ObjectiveFunction,
        result: &SelectionResult,
        timestamp: u64,
    ) -> &GalleryEntry {
        let summary = SelectionSummary::from(result);
        let improved = self
            .gallery
            .last()
            .is_some_and(|prev| summary.validation_accuracy > prev.summary.validation_accuracy);
        self.gallery.push(GalleryEntry {
            index: self.gallery.len(),
            function: of.clone(),
            summary,
            timestamp,
            improved,
        });
        self.gallery.last().expect("just pushed")
    }

    /// Makes a copy of entry `index` the current function. The gallery keeps
    /// every entry.
    pub fn revert(&mut self, index: usize) -> Result<&ObjectiveFunction, HistoryError> {
        let entry = self.gallery.get(index).ok_or(HistoryError::IndexOutOfRange {
            index,
            len: self.gallery.len(),
        })?;
        self.current = entry.function.clone();
        Ok(&self.current)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&SessionFileOut {
            version: SESSION_VERSION,
            session: self,
        })
        .expect("session serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, HistoryError> {
        let mut value: Value =
            serde_json::from_slice(bytes).map_err(|e| HistoryError::CorruptSession(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| HistoryError::CorruptSession("expected an object".into()))?;
        match obj.remove("version").and_then(|v| v.as_u64()) {
            Some(SESSION_VERSION) => {}
            Some(v) => {
                return Err(HistoryError::CorruptSession(format!(
                    "unsupported session version {v}"
                )))
            }
            None => return Err(HistoryError::CorruptSession("missing version".into())),
        }
        let session: Session =
            serde_json::from_value(value).map_err(|e| HistoryError::CorruptSession(e.to_string()))?;
        if session
            .gallery
            .iter()
            .enumerate()
            .any(|(i, e)| e.index != i)
        {
            return Err(HistoryError::CorruptSession(
                "gallery indices are not contiguous".into(),
            ));
        }
        Ok(session)
    }
}

pub fn persist_session(session: &Session, path: &Path) -> Result<(), HistoryError> {
    std::fs::write(path, session.to_json()).map_err(|source| HistoryError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_session(path: &Path) -> Result<Session, HistoryError> {
    let bytes = std::fs::read(path).map_err(|source| HistoryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Session::from_json(&bytes)
}
