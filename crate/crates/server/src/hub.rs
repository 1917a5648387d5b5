//! The hub's state and every mutation on it.
//!
//! All mutations take one lock, so they happen in a single total order.
//! Broadcasts are pushed to subscriber queues while that lock is held, which
//! makes every subscriber see the same frames in the same order.

use std::collections::{BTreeMap, VecDeque};

use parking_lot::Mutex;
use presence_core::{
    fuse, AdmitError, Admitted, AggregatorKind, Evidence, EvidenceStore, FreshnessPolicy, LogEvent,
    LogEventKind, OptInConfig, PresenceState, StatusMessage, Timestamp, UserProfile,
    MAX_STATUS_CHARS,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::mpsc;
use tracing::{info, warn};

use crate::card::BusinessCard;
use crate::clock::{Clock, ClockError};
use crate::config::DeploymentConfig;
use crate::eventlog::EventLog;

/// Status messages kept in memory; the log keeps all of them.
pub const FEED_RETENTION: usize = 500;
/// Status messages included in a subscription snapshot.
pub const SNAPSHOT_FEED: usize = 50;
/// Frames a subscriber may fall behind before it is disconnected.
pub const SUBSCRIBER_BUFFER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Snapshot,
    StateDelta,
    Feed,
    Heartbeat,
}

/// A broadcast before it is numbered for a particular connection.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub kind: FrameKind,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Number of deltas and feed entries broadcast before this snapshot.
    pub version: u64,
    pub states: BTreeMap<String, PresenceState>,
    pub feed: Vec<StatusMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDelta {
    pub user_id: String,
    pub state: PresenceState,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatesView {
    pub version: u64,
    pub states: BTreeMap<String, PresenceState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Open,
    Close,
}

#[derive(Debug, Error)]
pub enum HubError {
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error(transparent)]
    Admit(#[from] AdmitError),
    #[error("status text has {chars} characters, at most {MAX_STATUS_CHARS} allowed")]
    StatusTooLong { chars: usize },
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error("event log write failed: {0}")]
    Log(#[from] std::io::Error),
}

pub struct Subscription {
    pub snapshot: Snapshot,
    pub frames: mpsc::Receiver<Outbound>,
}

pub struct Hub {
    clock: Clock,
    policy: FreshnessPolicy,
    inner: Mutex<Inner>,
}

struct Inner {
    roster: BTreeMap<String, UserProfile>,
    prefs: BTreeMap<String, OptInConfig>,
    store: EvidenceStore,
    /// Last state published for each roster user.
    states: BTreeMap<String, PresenceState>,
    feed: VecDeque<StatusMessage>,
    latest_status: BTreeMap<String, StatusMessage>,
    version: u64,
    last_log_at: Timestamp,
    subscribers: Vec<mpsc::Sender<Outbound>>,
    log: EventLog,
}

impl Hub {
    pub fn new(config: &DeploymentConfig, log: EventLog, clock: Clock) -> Self {
        let roster: BTreeMap<_, _> =
            config.users.iter().map(|u| (u.user_id.clone(), u.clone())).collect();
        let prefs = config
            .initial_opt_ins()
            .into_iter()
            .map(|o| (o.user_id.clone(), o))
            .collect();
        let states = roster.keys().map(|u| (u.clone(), PresenceState::unknown())).collect();
        Hub {
            clock,
            policy: config.freshness,
            inner: Mutex::new(Inner {
                roster,
                prefs,
                store: EvidenceStore::new(),
                states,
                feed: VecDeque::new(),
                latest_status: BTreeMap::new(),
                version: 0,
                last_log_at: Timestamp::EPOCH,
                subscribers: Vec::new(),
                log,
            }),
        }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn policy(&self) -> &FreshnessPolicy {
        &self.policy
    }

    /// Unknown users are refused before consent is checked; consent is
    /// checked before the record itself is looked at.
    pub fn post_evidence(&self, ev: &Evidence) -> Result<Admitted, HubError> {
        let mut inner = self.inner.lock();
        let optin = inner
            .prefs
            .get(&ev.user_id)
            .cloned()
            .ok_or_else(|| HubError::UnknownUser(ev.user_id.clone()))?;
        let now = self.clock.now();
        let admitted = inner.store.admit(ev, &optin, now)?;
        self.refresh(&mut inner, now);
        Ok(admitted)
    }

    pub fn post_status(&self, user_id: &str, text: &str) -> Result<StatusMessage, HubError> {
        let chars = text.chars().count();
        let mut inner = self.inner.lock();
        inner.known(user_id)?;
        if chars > MAX_STATUS_CHARS {
            return Err(HubError::StatusTooLong { chars });
        }
        let mut at = self.clock.now().max(inner.last_log_at);
        if let Some(prev) = inner.latest_status.get(user_id) {
            at = at.max(Timestamp::from_millis(prev.posted_at.as_millis() + 1));
        }
        let message = StatusMessage { user_id: user_id.to_owned(), text: text.to_owned(), posted_at: at };
        inner.write_log(at, user_id, LogEventKind::StatusPost, json!({ "text": text }))?;
        inner.latest_status.insert(user_id.to_owned(), message.clone());
        inner.feed.push_back(message.clone());
        while inner.feed.len() > FEED_RETENTION {
            inner.feed.pop_front();
        }
        inner.broadcast(FrameKind::Feed, to_value(&message));
        Ok(message)
    }

    pub fn prefs(&self, user_id: &str) -> Result<OptInConfig, HubError> {
        let inner = self.inner.lock();
        inner.prefs.get(user_id).cloned().ok_or_else(|| HubError::UnknownUser(user_id.to_owned()))
    }

    /// Replaces a user's consent. Kinds switched off lose their stored
    /// evidence for good. Returns whether anything changed.
    pub fn update_prefs(&self, optin: OptInConfig) -> Result<bool, HubError> {
        let mut inner = self.inner.lock();
        let current = inner
            .prefs
            .get(&optin.user_id)
            .ok_or_else(|| HubError::UnknownUser(optin.user_id.clone()))?;
        if *current == optin {
            return Ok(false);
        }
        let now = self.clock.now();
        let detail = json!({ "enabled": optin.enabled, "show_location": optin.show_location });
        let at = now.max(inner.last_log_at);
        inner.write_log(at, &optin.user_id, LogEventKind::PrefChange, detail)?;
        inner.store.apply_opt_in(&optin);
        info!(user = %optin.user_id, "preferences updated");
        inner.prefs.insert(optin.user_id.clone(), optin);
        self.refresh(&mut inner, now);
        Ok(true)
    }

    /// Users that currently let `kind` report for them.
    pub fn allow_list(&self, kind: AggregatorKind) -> Vec<String> {
        let inner = self.inner.lock();
        inner.prefs.values().filter(|o| o.is_enabled(kind)).map(|o| o.user_id.clone()).collect()
    }

    pub fn card(&self, user_id: &str) -> Result<BusinessCard, HubError> {
        let mut inner = self.inner.lock();
        inner.known(user_id)?;
        let now = self.clock.now();
        self.refresh(&mut inner, now);
        let profile = &inner.roster[user_id];
        Ok(BusinessCard::new(profile, &inner.states[user_id], inner.latest_status.get(user_id)))
    }

    pub fn session(&self, user_id: &str, kind: SessionKind) -> Result<LogEvent, HubError> {
        let mut inner = self.inner.lock();
        inner.known(user_id)?;
        let at = self.clock.now().max(inner.last_log_at);
        let kind = match kind {
            SessionKind::Open => LogEventKind::DashboardOpen,
            SessionKind::Close => LogEventKind::DashboardClose,
        };
        inner.write_log(at, user_id, kind, Value::Null)
    }

    /// Registers a subscriber. The snapshot and the queue are taken under
    /// the same lock, so nothing falls between them.
    pub fn subscribe(&self) -> Subscription {
        let mut inner = self.inner.lock();
        let now = self.clock.now();
        self.refresh(&mut inner, now);
        let (tx, rx) = mpsc::channel(SUBSCRIBER_BUFFER);
        inner.subscribers.push(tx);
        let skip = inner.feed.len().saturating_sub(SNAPSHOT_FEED);
        Subscription {
            snapshot: Snapshot {
                version: inner.version,
                states: inner.states.clone(),
                feed: inner.feed.iter().skip(skip).cloned().collect(),
            },
            frames: rx,
        }
    }

    /// Moves a virtual clock forward and publishes whatever changes.
    pub fn set_clock(&self, to: Timestamp) -> Result<(), HubError> {
        let mut inner = self.inner.lock();
        self.clock.set(to)?;
        self.refresh(&mut inner, to);
        Ok(())
    }

    /// Expires old evidence; returns the number of users whose state changed.
    pub fn sweep(&self) -> usize {
        let mut inner = self.inner.lock();
        let now = self.clock.now();
        self.refresh(&mut inner, now)
    }

    pub fn states(&self) -> StatesView {
        let mut inner = self.inner.lock();
        let now = self.clock.now();
        self.refresh(&mut inner, now);
        StatesView { version: inner.version, states: inner.states.clone() }
    }

    pub fn users(&self) -> Vec<UserProfile> {
        self.inner.lock().roster.values().cloned().collect()
    }

    /// In-memory log contents; `None` when logging to a file.
    pub fn log_entries(&self) -> Option<Vec<LogEvent>> {
        self.inner.lock().log.entries().map(<[LogEvent]>::to_vec)
    }

    pub fn subscriber_count(&self) -> usize {
        let mut inner = self.inner.lock();
        inner.subscribers.retain(|s| !s.is_closed());
        inner.subscribers.len()
    }

    fn refresh(&self, inner: &mut Inner, now: Timestamp) -> usize {
        inner.store.sweep(now, &self.policy);
        let fused: Vec<(String, PresenceState)> = inner
            .roster
            .keys()
            .map(|u| (u.clone(), fuse(&inner.store, u, now, &self.policy, &inner.prefs[u])))
            .collect();
        let mut changed = 0;
        for (user_id, state) in fused {
            if inner.states.get(&user_id) == Some(&state) {
                continue;
            }
            changed += 1;
            inner.states.insert(user_id.clone(), state.clone());
            inner.broadcast(FrameKind::StateDelta, to_value(&StateDelta { user_id, state, at: now }));
        }
        changed
    }
}

impl Inner {
    fn known(&self, user_id: &str) -> Result<(), HubError> {
        if self.roster.contains_key(user_id) {
            Ok(())
        } else {
            Err(HubError::UnknownUser(user_id.to_owned()))
        }
    }

    fn write_log(
        &mut self,
        at: Timestamp,
        user_id: &str,
        kind: LogEventKind,
        detail: Value,
    ) -> Result<LogEvent, HubError> {
        let event = LogEvent { at, user_id: user_id.to_owned(), kind, detail };
        self.log.append(&event)?;
        self.last_log_at = at;
        Ok(event)
    }

    fn broadcast(&mut self, kind: FrameKind, payload: Value) {
        self.version += 1;
        let frame = Outbound { kind, payload };
        self.subscribers.retain(|tx| match tx.try_send(frame.clone()) {
            Ok(()) => true,
            Err(mpsc::error::TrySendError::Full(_)) => {
                warn!("disconnecting subscriber that fell {SUBSCRIBER_BUFFER} frames behind");
                false
            }
            Err(mpsc::error::TrySendError::Closed(_)) => false,
        });
    }
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("hub payloads serialize")
}
