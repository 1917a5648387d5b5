//! Deterministic scenario replay against a hub.
//!
//! Wall-clock pacing follows `at_offset / speed`. Before each post the hub's
//! virtual clock is advanced to the latest `observed_at` seen so far, so the
//! state timeline the hub produces depends only on the script, not on how
//! fast it was played.

use std::time::Duration;

use presence_core::Timestamp;
use serde::Serialize;
use thiserror::Error;
use tokio::time::Instant;
use tracing::{debug, warn};

use crate::scenario::ScenarioScript;
use crate::transport::{PostOutcome, Transport, TransportError};

const ATTEMPTS: usize = 3;
const RETRY_BACKOFF: Duration = Duration::from_millis(200);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ReplayReport {
    /// Events that received a definitive answer from the hub.
    pub sent: usize,
    /// Of those, how many the hub refused.
    pub rejected: usize,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("speed must be a positive finite number, got {0}")]
    InvalidSpeed(f64),
    #[error("gave up on event {index} after {ATTEMPTS} attempts: {source}")]
    Aborted {
        index: usize,
        report: ReplayReport,
        source: TransportError,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ReplayOptions {
    pub speed: f64,
    /// Drive the hub's virtual clock from the script's timestamps.
    pub drive_clock: bool,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions { speed: 1.0, drive_clock: true }
    }
}

pub async fn replay_scenario(
    script: &ScenarioScript,
    transport: &dyn Transport,
    options: ReplayOptions,
) -> Result<ReplayReport, ReplayError> {
    if !(options.speed.is_finite() && options.speed > 0.0) {
        return Err(ReplayError::InvalidSpeed(options.speed));
    }
    let wall_start = Instant::now();
    let mut virtual_now = script.start;
    let mut report = ReplayReport::default();

    for (index, event) in script.events.iter().enumerate() {
        let due = wall_start + event.at_offset.div_f64(options.speed);
        tokio::time::sleep_until(due).await;

        virtual_now = virtual_now.max(event.evidence.observed_at);
        let outcome = with_retries(|| async {
            if options.drive_clock {
                transport.set_clock(virtual_now).await?;
            }
            transport.post_evidence(&event.evidence).await
        })
        .await
        .map_err(|source| ReplayError::Aborted { index, report, source })?;

        report.sent += 1;
        if let PostOutcome::Rejected { status, reason } = outcome {
            debug!(index, status, %reason, "evidence rejected");
            report.rejected += 1;
        }
    }
    Ok(report)
}

async fn with_retries<F, Fut>(mut attempt: F) -> Result<PostOutcome, TransportError>
where
    F: FnMut() -> Fut,
    Fut: std::future::Future<Output = Result<PostOutcome, TransportError>>,
{
    let mut last = None;
    for n in 1..=ATTEMPTS {
        match attempt().await {
            Ok(outcome) => return Ok(outcome),
            Err(e) => {
                warn!(attempt = n, error = %e, "post failed");
                last = Some(e);
                if n < ATTEMPTS {
                    tokio::time::sleep(RETRY_BACKOFF).await;
                }
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Virtual time at which each event is delivered when the clock is driven.
pub fn virtual_schedule(script: &ScenarioScript) -> Vec<Timestamp> {
    let mut now = script.start;
    script
        .events
        .iter()
        .map(|e| {
            now = now.max(e.evidence.observed_at);
            now
        })
        .collect()
}
