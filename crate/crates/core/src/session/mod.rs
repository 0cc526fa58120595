//! Trial protocol engine, gaze-to-cell mapping, JSON-lines logs and the
//! HTTP/WebSocket session service.

mod gaze;
mod log;
mod protocol;
pub mod server;

pub use gaze::{map_pog_to_cell, GazeSample, GridLayout, ScreenRect};
pub use log::{logged_triggers, parse_log, replay, to_json_lines, trial_records, LogRecord};
pub use protocol::{
    Phase, ProtocolConfig, RetriggerPolicy, Session, SubmitOutcome, TargetCatalog, TrialPlan, TrialResult,
    TriggerEvent,
};

use crate::analytics::AnalyticsError;
use crate::geometry::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("invalid protocol config: {0}")]
    Config(String),
    #[error("unknown target ids: {}", .0.join(", "))]
    UnknownTargets(Vec<String>),
    #[error("targets without a built bank or rendered assets: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("{op} is not allowed in phase {phase:?}")]
    WrongPhase { op: &'static str, phase: Phase },
    #[error("timestamp {t} is earlier than the last logged time {last}")]
    NonMonotonic { t: f64, last: f64 },
    #[error("drawing is {found:?} but the trial grid is {expected:?} (cols, rows)")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("drawing has no cells")]
    EmptyDrawing,
    #[error("invalid drawing: {0}")]
    InvalidDrawing(GeometryError),
    #[error("log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
