//! Shared domain types and the presence fusion engine.
//!
//! Aggregators report [`Evidence`] about workers; the engine keeps the latest
//! observation per (user, aggregator kind) and summarizes it into a
//! [`PresenceState`] that never claims more than the evidence supports.

pub mod calendar;
pub mod fusion;
pub mod im;
pub mod model;
pub mod network;
pub mod style;
pub mod time;

pub use calendar::{calendar_now, CalendarNow};
pub use fusion::{
    apply_changes, diff_states, fuse, fuse_user, is_fresh, AdmitError, Admitted, EvidenceStore,
    FreshnessPolicy, FreshnessSlot, Observed, StateChange, UserEvidence,
};
pub use im::im_merge;
pub use model::*;
pub use network::{classify_network, NetworkConfig, NetworkError, NetworkZone};
pub use style::{render_style, Hue, Icon, Intensity, RenderStyle};
pub use time::Timestamp;
