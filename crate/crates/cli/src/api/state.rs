use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use cactus_core::stats::{standardize, StandardizedView};
use cactus_core::{load_session, persist_session, Dataset, Session};

use crate::workflow::read_dataset;
use crate::ApiError;

/// Default cap on configs sampled per training request.
pub const DEFAULT_SAMPLE_CAP: usize = 200;

/// A live session plus the data derived from its dataset.
pub struct SessionSlot {
    pub session: Session,
    pub dataset: Arc<Dataset>,
    pub view: Arc<StandardizedView>,
}

pub type SharedSlot = Arc<tokio::sync::Mutex<SessionSlot>>;

pub struct AppState {
    data_dir: PathBuf,
    pub sample_cap: usize,
    sessions: Mutex<HashMap<String, SharedSlot>>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !name.starts_with('.')
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            sample_cap: DEFAULT_SAMPLE_CAP,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_sample_cap(mut self, cap: usize) -> Self {
        self.sample_cap = cap.max(1);
        self
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.data_dir.join("sessions").join(format!("{id}.json"))
    }

    /// Datasets live in the data directory as `<name>.csv`.
    pub fn load_dataset(&self, name: &str) -> Result<Dataset, ApiError> {
        if !valid_name(name) {
            return Err(ApiError::new("InvalidDatasetName", format!("invalid dataset name `{name}`")));
        }
        let path = self.data_dir.join(format!("{name}.csv"));
        if !path.is_file() {
            return Err(ApiError::new("DatasetNotFound", format!("no dataset `{name}`")));
        }
        read_dataset(&path)
    }

    pub fn insert(&self, session: Session, dataset: Dataset) -> Result<SharedSlot, ApiError> {
        let view = standardize(&dataset, &session.split);
        let slot = SessionSlot {
            session,
            dataset: Arc::new(dataset),
            view: Arc::new(view),
        };
        self.persist(&slot)?;
        let id = slot.session.id.clone();
        let shared = Arc::new(tokio::sync::Mutex::new(slot));
        self.sessions
            .lock()
            .expect("session map poisoned")
            .insert(id, shared.clone());
        Ok(shared)
    }

    /// Looks a session up in memory, falling back to its file on disk.
    pub fn get(&self, id: &str) -> Result<SharedSlot, ApiError> {
        let not_found = || ApiError::new("SessionNotFound", format!("no session `{id}`"));
        if let Some(s) = self.sessions.lock().expect("session map poisoned").get(id) {
            return Ok(s.clone());
        }
        if !valid_name(id) {
            return Err(not_found());
        }
        let path = self.session_path(id);
        if !path.is_file() {
            return Err(not_found());
        }
        let session = load_session(&path)?;
        let dataset = self.load_dataset(&session.dataset_ref)?;
        session.split.check(&dataset)?;
        let view = standardize(&dataset, &session.split);
        let shared = Arc::new(tokio::sync::Mutex::new(SessionSlot {
            session,
            dataset: Arc::new(dataset),
            view: Arc::new(view),
        }));
        // Another request may have loaded it meanwhile; keep the first.
        Ok(self
            .sessions
            .lock()
            .expect("session map poisoned")
            .entry(id.to_string())
            .or_insert(shared)
            .clone())
    }

    pub fn persist(&self, slot: &SessionSlot) -> Result<(), ApiError> {
        let path = self.session_path(&slot.session.id);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)
                .map_err(|e| ApiError::new("IoError", format!("{}: {e}", dir.display())))?;
        }
        Ok(persist_session(&slot.session, &path)?)
    }
}
