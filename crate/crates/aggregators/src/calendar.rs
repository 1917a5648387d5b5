//! Calendar files: a JSON array of calendar event records.

use std::path::{Path, PathBuf};

use presence_core::{CalendarEvent, CalendarPayload};
use thiserror::Error;
use tracing::warn;

#[derive(Debug, Error)]
pub enum CalendarFileError {
    #[error("cannot read calendar {path}: {source}")]
    Unreadable { path: PathBuf, source: std::io::Error },
    #[error("calendar {path} is not a JSON array: {source}")]
    Malformed { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalendarParse {
    pub payload: CalendarPayload,
    pub warnings: Vec<String>,
}

pub fn parse_calendar(path: &Path) -> Result<CalendarParse, CalendarFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| CalendarFileError::Unreadable {
        path: path.to_owned(),
        source,
    })?;
    parse_calendar_str(&text).map_err(|source| CalendarFileError::Malformed {
        path: path.to_owned(),
        source,
    })
}

/// Bad entries are dropped one by one with a warning; the rest survive.
pub fn parse_calendar_str(text: &str) -> Result<CalendarParse, serde_json::Error> {
    let entries: Vec<serde_json::Value> = serde_json::from_str(text)?;
    let mut out = CalendarParse::default();
    for (i, entry) in entries.into_iter().enumerate() {
        match serde_json::from_value::<CalendarEvent>(entry) {
            Ok(ev) if ev.start < ev.end => out.payload.events.push(ev),
            Ok(ev) => {
                let msg = format!("event {i}: start {} is not before end {}", ev.start, ev.end);
                warn!("{msg}");
                out.warnings.push(msg);
            }
            Err(e) => {
                let msg = format!("event {i}: {e}");
                warn!("{msg}");
                out.warnings.push(msg);
            }
        }
    }
    Ok(out)
}
