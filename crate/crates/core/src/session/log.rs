//! JSON-lines session log and deterministic replay.

use serde::{Deserialize, Serialize};

use super::protocol::{Phase, ProtocolConfig, Session, TargetCatalog, TrialResult};
use super::{GazeSample, SessionError};
use crate::analytics::TrialRecord;
use crate::geometry::ShapeMask;

/// One line of the log. Timestamps are seconds since session start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Created { t: f64, session_id: String, config: ProtocolConfig },
    Phase { t: f64, trial: usize, phase: Phase },
    Gaze { t: f64, x: f64, y: f64, valid: bool },
    Trigger { t: f64, trial: usize, cell: usize, asset: String },
    Result { t: f64, drawing: String, result: TrialResult },
}

impl LogRecord {
    pub fn t(&self) -> f64 {
        match self {
            LogRecord::Created { t, .. }
            | LogRecord::Phase { t, .. }
            | LogRecord::Gaze { t, .. }
            | LogRecord::Trigger { t, .. }
            | LogRecord::Result { t, .. } => *t,
        }
    }
}

pub fn to_json_lines(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("log records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, SessionError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| SessionError::Log { line: i + 1, message: e.to_string() }))
        .collect()
}

/// Re-drives a fresh session with the inputs found in `records` (phase
/// requests, gaze samples and drawings, at their logged times). Output
/// records such as triggers and scores are regenerated, not copied.
pub fn replay(records: &[LogRecord], catalog: &TargetCatalog) -> Result<Session, SessionError> {
    let Some(LogRecord::Created { session_id, config, .. }) = records.first() else {
        return Err(SessionError::Log { line: 1, message: "log must start with a created record".into() });
    };
    let mut s = Session::new(session_id.clone(), config.clone(), catalog)?;
    for r in &records[1..] {
        match r {
            LogRecord::Phase { t, phase: Phase::Sensing, .. } => {
                s.begin(Some(*t))?;
            }
            LogRecord::Phase { t, phase: Phase::Drawing, .. } => {
                s.end_sensing(Some(*t))?;
            }
            LogRecord::Gaze { t, x, y, valid } => {
                s.ingest_gaze(GazeSample { t: *t, x: *x, y: *y, valid: *valid })?;
            }
            LogRecord::Result { t, drawing, .. } => {
                let mask = ShapeMask::parse(drawing).map_err(SessionError::InvalidDrawing)?;
                s.submit_drawing(mask, Some(*t))?;
            }
            LogRecord::Created { .. } => {
                return Err(SessionError::Log { line: 0, message: "second created record".into() });
            }
            LogRecord::Phase { .. } | LogRecord::Trigger { .. } => {}
        }
    }
    Ok(s)
}

/// Scored trials found in a log.
pub fn trial_records(records: &[LogRecord]) -> Vec<TrialRecord> {
    let session = match records.first() {
        Some(LogRecord::Created { session_id, .. }) => session_id.as_str(),
        _ => "",
    };
    records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Result { result, .. } => Some(result.to_record(session)),
            _ => None,
        })
        .collect()
}

/// (t, cell) of every trigger in a log.
pub fn logged_triggers(records: &[LogRecord]) -> Vec<(f64, usize)> {
    records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Trigger { t, cell, .. } => Some((*t, *cell)),
            _ => None,
        })
        .collect()
}
