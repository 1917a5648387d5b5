//! Append-only NDJSON instrumentation log.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use presence_core::LogEvent;
use thiserror::Error;

#[derive(Debug)]
pub enum EventLog {
    File(File),
    /// Kept in memory; for tests and ephemeral hubs.
    Memory(Vec<LogEvent>),
}

impl EventLog {
    pub fn open(path: &Path) -> io::Result<Self> {
        OpenOptions::new().create(true).append(true).open(path).map(EventLog::File)
    }

    pub fn memory() -> Self {
        EventLog::Memory(Vec::new())
    }

    pub fn append(&mut self, event: &LogEvent) -> io::Result<()> {
        match self {
            EventLog::File(f) => {
                let mut line = serde_json::to_vec(event)?;
                line.push(b'\n');
                f.write_all(&line)?;
                f.flush()
            }
            EventLog::Memory(v) => {
                v.push(event.clone());
                Ok(())
            }
        }
    }

    /// Entries held in memory, or `None` for a file-backed log.
    pub fn entries(&self) -> Option<&[LogEvent]> {
        match self {
            EventLog::File(_) => None,
            EventLog::Memory(v) => Some(v),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReadLogError {
    #[error("cannot read log: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Line { line: usize, source: serde_json::Error },
}

/// Parses NDJSON log records; blank lines are skipped.
pub fn read_log(reader: impl io::Read) -> Result<Vec<LogEvent>, ReadLogError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|source| ReadLogError::Line { line: i + 1, source })?,
        );
    }
    Ok(out)
}
