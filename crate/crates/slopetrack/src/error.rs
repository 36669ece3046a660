//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Integration produced a non-finite state component.
    #[error("non-finite state encountered during integration")]
    NonFinite,

    /// The truth simulation blew up; `row` is the control-step index of the
    /// last logged row.
    #[error("simulation diverged at control step {row}")]
    Diverged { row: usize },

    /// Measurement timestamps must be strictly increasing.
    #[error("non-monotone measurement time: {prev} followed by {next}")]
    NonMonotoneTime { prev: f64, next: f64 },

    /// A track needs at least three distinct waypoints and nonzero segments.
    #[error("invalid track: {0}")]
    InvalidTrack(String),

    /// Configuration rejected before the run started.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Cost integration over an empty or inverted time window.
    #[error("cost window is empty (start >= end)")]
    EmptyWindow,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("json serialize error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
