//! Domain records shared by the server, the aggregators and the CLI.
//!
//! Every type here has a canonical JSON encoding: snake_case field names,
//! snake_case enum values, timestamps as RFC 3339 UTC strings with
//! millisecond precision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::time::Timestamp;

/// Longest status message accepted, in characters.
pub const MAX_STATUS_CHARS: usize = 280;

/// Evidence may be stamped at most this far ahead of the server clock.
pub const FUTURE_TOLERANCE_MS: i64 = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Jabber,
    GoogleTalk,
    Skype,
    WindowsLiveMessenger,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Jabber,
        Protocol::GoogleTalk,
        Protocol::Skype,
        Protocol::WindowsLiveMessenger,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Jabber => "jabber",
            Protocol::GoogleTalk => "google_talk",
            Protocol::Skype => "skype",
            Protocol::WindowsLiveMessenger => "windows_live_messenger",
        }
    }
}

impl FromStr for Protocol {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownName(s.to_owned()))
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

/// The five evidence channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    OfficeVision,
    DevicePresence,
    ComputerClient,
    Calendar,
    ImPresence,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 5] = [
        AggregatorKind::OfficeVision,
        AggregatorKind::DevicePresence,
        AggregatorKind::ComputerClient,
        AggregatorKind::Calendar,
        AggregatorKind::ImPresence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregatorKind::OfficeVision => "office_vision",
            AggregatorKind::DevicePresence => "device_presence",
            AggregatorKind::ComputerClient => "computer_client",
            AggregatorKind::Calendar => "calendar",
            AggregatorKind::ImPresence => "im_presence",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for AggregatorKind {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AggregatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownName(s.to_owned()))
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    /// First name or nickname shown on the tile.
    pub display_name: String,
    pub photo_ref: String,
    pub email: String,
    #[serde(default)]
    pub im_handles: BTreeMap<Protocol, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OfficeMotionPayload {
    pub occupant_motion: bool,
    pub visitor_motion: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceSightingPayload {
    pub device_id: String,
    pub ap_id: String,
    #[serde(default)]
    pub ap_label: String,
}

impl DeviceSightingPayload {
    /// Human-readable location, falling back to the access point id.
    pub fn location(&self) -> &str {
        if self.ap_label.is_empty() {
            &self.ap_id
        } else {
            &self.ap_label
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkClass {
    Internal,
    Vpn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputerActivityPayload {
    pub last_input_at: Timestamp,
    pub network_class: NetworkClass,
    pub host_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarEventKind {
    Meeting,
    Vacation,
    Sick,
    Travel,
    WorkFromHome,
    Other,
}

impl CalendarEventKind {
    pub fn is_out_of_office(self) -> bool {
        matches!(
            self,
            CalendarEventKind::Vacation
                | CalendarEventKind::Sick
                | CalendarEventKind::Travel
                | CalendarEventKind::WorkFromHome
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEvent {
    pub start: Timestamp,
    pub end: Timestamp,
    pub kind: CalendarEventKind,
    #[serde(default)]
    pub title: Option<String>,
}

impl CalendarEvent {
    pub fn contains(&self, now: Timestamp) -> bool {
        self.start <= now && now < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CalendarPayload {
    pub events: Vec<CalendarEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImStatus {
    Online,
    Away,
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImStatusPayload {
    pub protocol: Protocol,
    pub status: ImStatus,
}

/// Aggregator-specific body of an [`Evidence`] record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    OfficeMotion(OfficeMotionPayload),
    DeviceSighting(DeviceSightingPayload),
    ComputerActivity(ComputerActivityPayload),
    Calendar(CalendarPayload),
    ImStatus(ImStatusPayload),
}

impl Payload {
    pub fn kind(&self) -> AggregatorKind {
        match self {
            Payload::OfficeMotion(_) => AggregatorKind::OfficeVision,
            Payload::DeviceSighting(_) => AggregatorKind::DevicePresence,
            Payload::ComputerActivity(_) => AggregatorKind::ComputerClient,
            Payload::Calendar(_) => AggregatorKind::Calendar,
            Payload::ImStatus(_) => AggregatorKind::ImPresence,
        }
    }

    fn decode(kind: AggregatorKind, value: serde_json::Value) -> serde_json::Result<Payload> {
        Ok(match kind {
            AggregatorKind::OfficeVision => Payload::OfficeMotion(serde_json::from_value(value)?),
            AggregatorKind::DevicePresence => {
                Payload::DeviceSighting(serde_json::from_value(value)?)
            }
            AggregatorKind::ComputerClient => {
                Payload::ComputerActivity(serde_json::from_value(value)?)
            }
            AggregatorKind::Calendar => Payload::Calendar(serde_json::from_value(value)?),
            AggregatorKind::ImPresence => Payload::ImStatus(serde_json::from_value(value)?),
        })
    }
}

/// One timestamped observation from one aggregator about one worker.
///
/// Decoding selects the payload shape from `kind`, so a body whose payload
/// does not fit its declared kind is rejected at parse time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawEvidence")]
pub struct Evidence {
    pub user_id: String,
    pub kind: AggregatorKind,
    pub source_id: String,
    pub observed_at: Timestamp,
    pub payload: Payload,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvidence {
    user_id: String,
    kind: AggregatorKind,
    source_id: String,
    observed_at: Timestamp,
    payload: serde_json::Value,
}

impl TryFrom<RawEvidence> for Evidence {
    type Error = String;

    fn try_from(raw: RawEvidence) -> Result<Self, Self::Error> {
        let payload = Payload::decode(raw.kind, raw.payload)
            .map_err(|e| format!("payload does not match kind `{}`: {e}", raw.kind))?;
        Ok(Evidence {
            user_id: raw.user_id,
            kind: raw.kind,
            source_id: raw.source_id,
            observed_at: raw.observed_at,
            payload,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvidenceError {
    #[error("empty user_id")]
    EmptyUser,
    #[error("payload is {payload} but kind is {kind}")]
    KindMismatch {
        kind: AggregatorKind,
        payload: AggregatorKind,
    },
    #[error("device sighting has empty ap_id")]
    EmptyAccessPoint,
    #[error("last_input_at {last_input_at} is after observed_at {observed_at}")]
    InputAfterObservation {
        last_input_at: Timestamp,
        observed_at: Timestamp,
    },
    #[error("calendar event {index} does not start before it ends")]
    InvertedEvent { index: usize },
}

impl Evidence {
    pub fn new(
        user_id: impl Into<String>,
        source_id: impl Into<String>,
        observed_at: Timestamp,
        payload: Payload,
    ) -> Self {
        Evidence {
            user_id: user_id.into(),
            kind: payload.kind(),
            source_id: source_id.into(),
            observed_at,
            payload,
        }
    }

    /// Checks the record-level invariants that the type system cannot.
    pub fn validate(&self) -> Result<(), EvidenceError> {
        if self.user_id.is_empty() {
            return Err(EvidenceError::EmptyUser);
        }
        if self.payload.kind() != self.kind {
            return Err(EvidenceError::KindMismatch {
                kind: self.kind,
                payload: self.payload.kind(),
            });
        }
        match &self.payload {
            Payload::DeviceSighting(s) if s.ap_id.is_empty() => {
                Err(EvidenceError::EmptyAccessPoint)
            }
            Payload::ComputerActivity(c) if c.last_input_at > self.observed_at => {
                Err(EvidenceError::InputAfterObservation {
                    last_input_at: c.last_input_at,
                    observed_at: self.observed_at,
                })
            }
            Payload::Calendar(cal) => match cal.events.iter().position(|e| e.start >= e.end) {
                Some(index) => Err(EvidenceError::InvertedEvent { index }),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// Fused presence category, declared in rule-priority order: an earlier
/// variant is a more specific claim about where the worker is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresenceCategory {
    OfficeWithVisitor,
    Office,
    Building,
    RemoteActive,
    RemoteIdle,
    OnlineOnly,
    OutOfOffice,
    Unknown,
}

impl PresenceCategory {
    pub const ALL: [PresenceCategory; 8] = [
        PresenceCategory::OfficeWithVisitor,
        PresenceCategory::Office,
        PresenceCategory::Building,
        PresenceCategory::RemoteActive,
        PresenceCategory::RemoteIdle,
        PresenceCategory::OnlineOnly,
        PresenceCategory::OutOfOffice,
        PresenceCategory::Unknown,
    ];

    /// 1-based index of the fusion rule that produces this category.
    pub fn rule(self) -> u8 {
        self as u8 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overlay {
    VisitorIcon,
    CalendarIcon,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PresenceState {
    pub category: PresenceCategory,
    #[serde(default)]
    pub overlays: BTreeSet<Overlay>,
    #[serde(default)]
    pub location_label: Option<String>,
}

impl PresenceState {
    pub fn unknown() -> Self {
        PresenceState {
            category: PresenceCategory::Unknown,
            overlays: BTreeSet::new(),
            location_label: None,
        }
    }
}

impl Default for PresenceState {
    fn default() -> Self {
        PresenceState::unknown()
    }
}

/// Per-kind consent flags. Always total over the five kinds; decoding a map
/// that omits a kind fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EnabledKinds([bool; 5]);

impl EnabledKinds {
    pub const NONE: EnabledKinds = EnabledKinds([false; 5]);
    pub const ALL: EnabledKinds = EnabledKinds([true; 5]);

    pub fn get(&self, kind: AggregatorKind) -> bool {
        self.0[kind.index()]
    }

    pub fn set(&mut self, kind: AggregatorKind, enabled: bool) {
        self.0[kind.index()] = enabled;
    }

    pub fn with(mut self, kind: AggregatorKind, enabled: bool) -> Self {
        self.set(kind, enabled);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (AggregatorKind, bool)> + '_ {
        AggregatorKind::ALL.into_iter().map(|k| (k, self.get(k)))
    }
}

impl Serialize for EnabledKinds {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<AggregatorKind, bool> = self.iter().collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EnabledKinds {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<AggregatorKind, bool>::deserialize(deserializer)?;
        let mut flags = EnabledKinds::NONE;
        for kind in AggregatorKind::ALL {
            match map.get(&kind) {
                Some(&on) => flags.set(kind, on),
                None => {
                    return Err(serde::de::Error::custom(format!(
                        "enabled map is missing kind `{kind}`"
                    )))
                }
            }
        }
        Ok(flags)
    }
}

/// One user's collection consent. The default enables nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptInConfig {
    pub user_id: String,
    pub enabled: EnabledKinds,
    #[serde(default)]
    pub show_location: bool,
}

impl OptInConfig {
    pub fn disabled(user_id: impl Into<String>) -> Self {
        OptInConfig {
            user_id: user_id.into(),
            enabled: EnabledKinds::NONE,
            show_location: false,
        }
    }

    pub fn all_enabled(user_id: impl Into<String>) -> Self {
        OptInConfig {
            user_id: user_id.into(),
            enabled: EnabledKinds::ALL,
            show_location: true,
        }
    }

    pub fn is_enabled(&self, kind: AggregatorKind) -> bool {
        self.enabled.get(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusMessage {
    pub user_id: String,
    /// Empty text clears the visible status.
    pub text: String,
    pub posted_at: Timestamp,
}

impl StatusMessage {
    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogEventKind {
    DashboardOpen,
    DashboardClose,
    PrefChange,
    StatusPost,
}

/// Append-only instrumentation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub at: Timestamp,
    pub user_id: String,
    pub kind: LogEventKind,
    #[serde(default)]
    pub detail: serde_json::Value,
}
