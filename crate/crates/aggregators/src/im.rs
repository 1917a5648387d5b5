//! Simulated IM presence: `<user>/<protocol>.status` files holding one of
//! `online`, `away` or `offline`.

use std::path::Path;

use presence_core::{ImStatus, ImStatusPayload, Protocol};
use tracing::warn;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImPoll {
    pub statuses: Vec<ImStatusPayload>,
    pub warnings: Vec<String>,
}

/// Reads one user's status directory. A missing directory yields nothing;
/// files that cannot be read or carry an unknown token are skipped.
pub fn poll_im(user_dir: &Path) -> ImPoll {
    let mut out = ImPoll::default();
    let Ok(entries) = std::fs::read_dir(user_dir) else {
        return out;
    };
    let mut files: Vec<_> = entries.filter_map(Result::ok).map(|e| e.path()).collect();
    files.sort();
    for path in files {
        if path.extension().and_then(|e| e.to_str()) != Some("status") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let protocol = match stem.parse::<Protocol>() {
            Ok(p) => p,
            Err(_) => {
                out.warn(format!("{}: unknown protocol `{stem}`", path.display()));
                continue;
            }
        };
        let Ok(text) = std::fs::read_to_string(&path) else {
            continue;
        };
        match parse_status(&text) {
            Some(status) => out.statuses.push(ImStatusPayload { protocol, status }),
            None => out.warn(format!("{}: unknown status `{}`", path.display(), text.trim())),
        }
    }
    out
}

impl ImPoll {
    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn parse_status(text: &str) -> Option<ImStatus> {
    match text.trim().to_ascii_lowercase().as_str() {
        "online" => Some(ImStatus::Online),
        "away" => Some(ImStatus::Away),
        "offline" => Some(ImStatus::Offline),
        _ => None,
    }
}
