//! Scripted evidence sequences for deterministic replay.

use std::path::{Path, PathBuf};
use std::time::Duration;

use presence_core::{time::duration_ms, Evidence, Timestamp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEvent {
    /// Wall-clock offset from the start of the replay at speed 1.
    #[serde(rename = "at_offset_ms", with = "duration_ms")]
    pub at_offset: Duration,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub start: Timestamp,
    pub events: Vec<ScriptEvent>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Unreadable { path: PathBuf, source: std::io::Error },
    #[error("invalid scenario {path}: {source}")]
    Malformed { path: PathBuf, source: serde_json::Error },
    #[error("event {index} is scheduled before the event preceding it")]
    OutOfOrder { index: usize },
}

impl ScenarioScript {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Unreadable {
            path: path.to_owned(),
            source,
        })?;
        let script: ScenarioScript =
            serde_json::from_str(&text).map_err(|source| ScenarioError::Malformed {
                path: path.to_owned(),
                source,
            })?;
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self.events.windows(2).position(|w| w[1].at_offset < w[0].at_offset) {
            Some(i) => Err(ScenarioError::OutOfOrder { index: i + 1 }),
            None => Ok(()),
        }
    }

    /// Offset of the last event, zero for an empty script.
    pub fn span(&self) -> Duration {
        self.events.last().map_or(Duration::ZERO, |e| e.at_offset)
    }
}
