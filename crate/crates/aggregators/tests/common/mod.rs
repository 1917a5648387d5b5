#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use async_trait::async_trait;
use presence_aggregators::{PostOutcome, Transport, TransportError};
use presence_core::{AggregatorKind, Evidence, Timestamp};

/// In-memory hub stand-in that records every request it sees.
#[derive(Default)]
pub struct Recorder {
    pub allow: Mutex<BTreeMap<AggregatorKind, BTreeSet<String>>>,
    pub wire: Mutex<Vec<Evidence>>,
    pub clock: Mutex<Vec<Timestamp>>,
    /// Number of upcoming posts that fail with a connection error.
    pub fail_next: Mutex<usize>,
}

impl Recorder {
    pub fn allowing(kind: AggregatorKind, users: &[&str]) -> Self {
        let r = Recorder::default();
        r.allow
            .lock()
            .unwrap()
            .insert(kind, users.iter().map(|u| u.to_string()).collect());
        r
    }

    pub fn wire(&self) -> Vec<Evidence> {
        self.wire.lock().unwrap().clone()
    }
}

#[async_trait]
impl Transport for Recorder {
    async fn post_evidence(&self, evidence: &Evidence) -> Result<PostOutcome, TransportError> {
        {
            let mut fail = self.fail_next.lock().unwrap();
            if *fail > 0 {
                *fail -= 1;
                return Err(TransportError::Connection("refused".into()));
            }
        }
        self.wire.lock().unwrap().push(evidence.clone());
        let allowed = self
            .allow
            .lock()
            .unwrap()
            .get(&evidence.kind)
            .is_some_and(|s| s.contains(&evidence.user_id));
        Ok(if allowed {
            PostOutcome::Accepted
        } else {
            PostOutcome::Rejected { status: 403, reason: "opt_in_disabled".into() }
        })
    }

    async fn allow_list(&self, kind: AggregatorKind) -> Result<Vec<String>, TransportError> {
        Ok(self
            .allow
            .lock()
            .unwrap()
            .get(&kind)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default())
    }

    async fn set_clock(&self, now: Timestamp) -> Result<(), TransportError> {
        self.clock.lock().unwrap().push(now);
        Ok(())
    }
}
