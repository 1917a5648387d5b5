//! The presence hub: admits evidence under each worker's consent, fuses it
//! into presence states, and streams states and status messages to
//! dashboards over HTTP.

pub mod card;
pub mod clock;
pub mod config;
pub mod eventlog;
pub mod http;
pub mod hub;
pub mod stream;

use std::sync::Arc;

pub use card::{presence_sentence, BusinessCard, ImChannel};
pub use clock::{Clock, ClockError};
pub use config::{ClockMode, ConfigError, DeploymentConfig};
pub use eventlog::{read_log, EventLog, ReadLogError};
pub use http::{router, router_with_heartbeat, serve, spawn_sweeper};
pub use hub::{
    FrameKind, Hub, HubError, SessionKind, Snapshot, StateDelta, StatesView, Subscription,
};
pub use stream::{FoldError, FoldedView, StreamFrame};

/// Builds a hub from a validated config, opening its event log.
pub fn hub_from_config(config: &DeploymentConfig) -> std::io::Result<Arc<Hub>> {
    let log = match &config.log_path {
        Some(path) => EventLog::open(path)?,
        None => EventLog::memory(),
    };
    Ok(Arc::new(Hub::new(config, log, Clock::new(config.clock))))
}
