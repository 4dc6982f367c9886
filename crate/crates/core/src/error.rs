use thiserror::Error;

use crate::conflict::ConflictError;
use crate::data::DataError;
use crate::history::HistoryError;
use crate::objective::ParseError;
use crate::scorer::{ScoreError, SolverError};
use crate::stats::StatsError;
use crate::zoo::TrainError;

/// Any engine error. [`Error::code`] gives the stable machine-readable code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Conflict(#[from] ConflictError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    History(#[from] HistoryError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Data(e) => e.code(),
            Error::Parse(e) => e.code(),
            Error::Conflict(e) => e.code(),
            Error::Stats(e) => e.code(),
            Error::Train(e) => e.code(),
            Error::Score(e) => e.code(),
            Error::Solver(e) => e.code(),
            Error::History(e) => e.code(),
        }
    }
}
