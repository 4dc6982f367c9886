//! Command-line and HTTP front ends for the cactus engine.

pub mod api;
mod error;
pub mod workflow;

pub use error::{status_for, ApiError};
