//! NDJSON framing for subscriptions, and the client-side fold.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::time::Duration;

use axum::body::Bytes;
use futures::Stream;
use presence_core::{PresenceState, StatusMessage};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::hub::{FrameKind, Outbound, Snapshot, StateDelta, Subscription};

pub const HEARTBEAT_AFTER: Duration = Duration::from_secs(15);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamFrame {
    pub seq: u64,
    pub kind: FrameKind,
    pub payload: Value,
}

impl StreamFrame {
    pub fn to_line(&self) -> Bytes {
        let mut line = serde_json::to_vec(self).expect("frames serialize");
        line.push(b'\n');
        Bytes::from(line)
    }
}

/// Numbers a subscription's frames from 1, starting with the snapshot, and
/// fills silences longer than `heartbeat` with heartbeat frames. Ends when
/// the hub drops the subscriber.
pub fn frames(sub: Subscription, heartbeat: Duration) -> impl Stream<Item = StreamFrame> + Send {
    let first = Outbound {
        kind: FrameKind::Snapshot,
        payload: serde_json::to_value(&sub.snapshot).expect("snapshot serializes"),
    };
    futures::stream::unfold((sub.frames, 0u64, Some(first)), move |(mut rx, seq, first)| async move {
        let next = match first {
            Some(f) => f,
            None => match tokio::time::timeout(heartbeat, rx.recv()).await {
                Ok(Some(f)) => f,
                Ok(None) => return None,
                Err(_) => Outbound { kind: FrameKind::Heartbeat, payload: Value::Object(Default::default()) },
            },
        };
        let frame = StreamFrame { seq: seq + 1, kind: next.kind, payload: next.payload };
        Some((frame, (rx, seq + 1, None)))
    })
}

pub fn ndjson(sub: Subscription, heartbeat: Duration) -> impl Stream<Item = Result<Bytes, Infallible>> + Send {
    use futures::StreamExt;
    frames(sub, heartbeat).map(|f| Ok(f.to_line()))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoldError {
    #[error("expected seq {expected}, got {got}")]
    Gap { expected: u64, got: u64 },
    #[error("first frame must be a snapshot, got {0:?}")]
    NoSnapshot(FrameKind),
    #[error("bad {kind:?} payload: {message}")]
    Payload { kind: FrameKind, message: String },
}

/// What a dashboard holds: the state map and feed folded from one
/// subscription.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FoldedView {
    pub states: BTreeMap<String, PresenceState>,
    pub feed: Vec<StatusMessage>,
    /// Snapshot version plus deltas and feed entries applied since.
    pub version: u64,
    pub last_seq: u64,
}

impl FoldedView {
    pub fn apply(&mut self, frame: &StreamFrame) -> Result<(), FoldError> {
        let expected = self.last_seq + 1;
        if frame.seq != expected {
            return Err(FoldError::Gap { expected, got: frame.seq });
        }
        if self.last_seq == 0 && frame.kind != FrameKind::Snapshot {
            return Err(FoldError::NoSnapshot(frame.kind));
        }
        let bad = |e: serde_json::Error| FoldError::Payload { kind: frame.kind, message: e.to_string() };
        match frame.kind {
            FrameKind::Snapshot => {
                let snap: Snapshot = serde_json::from_value(frame.payload.clone()).map_err(bad)?;
                self.states = snap.states;
                self.feed = snap.feed;
                self.version = snap.version;
            }
            FrameKind::StateDelta => {
                let delta: StateDelta = serde_json::from_value(frame.payload.clone()).map_err(bad)?;
                self.states.insert(delta.user_id, delta.state);
                self.version += 1;
            }
            FrameKind::Feed => {
                let msg: StatusMessage = serde_json::from_value(frame.payload.clone()).map_err(bad)?;
                self.feed.push(msg);
                self.version += 1;
            }
            FrameKind::Heartbeat => {}
        }
        self.last_seq = frame.seq;
        Ok(())
    }
}
