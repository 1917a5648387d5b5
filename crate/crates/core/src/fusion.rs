//! Evidence store and presence fusion.
//!
//! The store keeps at most one observation per (user, kind), and one per
//! (user, protocol) for IM. [`fuse`] walks a fixed rule list and returns the
//! most specific category the fresh evidence directly supports. Lacking
//! support for a specific claim, it falls through to a more general one; it
//! never guesses upward.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::calendar_now;
use crate::im::im_merge;
use crate::model::{
    AggregatorKind, CalendarPayload, ComputerActivityPayload, DeviceSightingPayload, Evidence,
    EvidenceError, ImStatus, NetworkClass, OfficeMotionPayload, OptInConfig, Overlay, Payload,
    PresenceCategory, PresenceState, Protocol, FUTURE_TOLERANCE_MS,
};
use crate::time::{duration_ms, Timestamp};

/// How long each kind of observation keeps counting as current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreshnessPolicy {
    #[serde(with = "duration_ms")]
    pub motion_ttl: Duration,
    #[serde(with = "duration_ms")]
    pub sighting_ttl: Duration,
    /// Input within this window makes a computer session "active".
    #[serde(with = "duration_ms")]
    pub input_active_window: Duration,
    #[serde(with = "duration_ms")]
    pub computer_session_ttl: Duration,
    #[serde(with = "duration_ms")]
    pub im_ttl: Duration,
}

impl Default for FreshnessPolicy {
    fn default() -> Self {
        FreshnessPolicy {
            motion_ttl: Duration::from_secs(300),
            sighting_ttl: Duration::from_secs(600),
            input_active_window: Duration::from_secs(300),
            computer_session_ttl: Duration::from_secs(600),
            im_ttl: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("freshness duration `{0}` must be positive")]
pub struct ZeroDuration(pub &'static str);

impl FreshnessPolicy {
    pub fn validate(&self) -> Result<(), ZeroDuration> {
        let fields = [
            ("motion_ttl", self.motion_ttl),
            ("sighting_ttl", self.sighting_ttl),
            ("input_active_window", self.input_active_window),
            ("computer_session_ttl", self.computer_session_ttl),
            ("im_ttl", self.im_ttl),
        ];
        match fields.iter().find(|(_, d)| d.is_zero()) {
            Some((name, _)) => Err(ZeroDuration(name)),
            None => Ok(()),
        }
    }

    pub fn ttl(&self, slot: FreshnessSlot) -> Duration {
        match slot {
            FreshnessSlot::Motion => self.motion_ttl,
            FreshnessSlot::Sighting => self.sighting_ttl,
            FreshnessSlot::ComputerSession => self.computer_session_ttl,
            FreshnessSlot::Im => self.im_ttl,
        }
    }
}

/// Slots that expire by age. Calendar entries are judged by interval
/// containment instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FreshnessSlot {
    Motion,
    Sighting,
    ComputerSession,
    Im,
}

/// Inclusive boundary: an observation exactly one TTL old is still fresh.
pub fn is_fresh(
    slot: FreshnessSlot,
    observed_at: Timestamp,
    now: Timestamp,
    policy: &FreshnessPolicy,
) -> bool {
    now.millis_since(observed_at) <= policy.ttl(slot).as_millis() as i64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observed<T> {
    pub payload: T,
    pub observed_at: Timestamp,
}

impl<T> Observed<T> {
    pub fn new(payload: T, observed_at: Timestamp) -> Self {
        Observed { payload, observed_at }
    }
}

/// Latest retained observation of each kind for one user.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UserEvidence {
    pub motion: Option<Observed<OfficeMotionPayload>>,
    pub sighting: Option<Observed<DeviceSightingPayload>>,
    pub computer: Option<Observed<ComputerActivityPayload>>,
    pub calendar: Option<Observed<CalendarPayload>>,
    #[serde(default)]
    pub im: BTreeMap<Protocol, Observed<ImStatus>>,
}

impl UserEvidence {
    pub fn is_empty(&self) -> bool {
        self.motion.is_none()
            && self.sighting.is_none()
            && self.computer.is_none()
            && self.calendar.is_none()
            && self.im.is_empty()
    }

    pub fn has_kind(&self, kind: AggregatorKind) -> bool {
        match kind {
            AggregatorKind::OfficeVision => self.motion.is_some(),
            AggregatorKind::DevicePresence => self.sighting.is_some(),
            AggregatorKind::ComputerClient => self.computer.is_some(),
            AggregatorKind::Calendar => self.calendar.is_some(),
            AggregatorKind::ImPresence => !self.im.is_empty(),
        }
    }

    pub fn clear_kind(&mut self, kind: AggregatorKind) {
        match kind {
            AggregatorKind::OfficeVision => self.motion = None,
            AggregatorKind::DevicePresence => self.sighting = None,
            AggregatorKind::ComputerClient => self.computer = None,
            AggregatorKind::Calendar => self.calendar = None,
            AggregatorKind::ImPresence => self.im.clear(),
        }
    }

    fn admit(&mut self, payload: &Payload, at: Timestamp) -> Admitted {
        fn replace<T: Clone>(slot: &mut Option<Observed<T>>, payload: &T, at: Timestamp) -> Admitted {
            match slot {
                Some(existing) if existing.observed_at >= at => Admitted::Stale,
                _ => {
                    *slot = Some(Observed::new(payload.clone(), at));
                    Admitted::Stored
                }
            }
        }
        match payload {
            Payload::OfficeMotion(p) => replace(&mut self.motion, p, at),
            Payload::DeviceSighting(p) => replace(&mut self.sighting, p, at),
            Payload::ComputerActivity(p) => replace(&mut self.computer, p, at),
            Payload::Calendar(p) => replace(&mut self.calendar, p, at),
            Payload::ImStatus(p) => {
                let mut slot = self.im.remove(&p.protocol);
                let outcome = replace(&mut slot, &p.status, at);
                self.im.extend(slot.map(|s| (p.protocol, s)));
                outcome
            }
        }
    }

    fn sweep(&mut self, now: Timestamp, policy: &FreshnessPolicy) {
        let keep = |slot, at| is_fresh(slot, at, now, policy);
        if self.motion.as_ref().is_some_and(|m| !keep(FreshnessSlot::Motion, m.observed_at)) {
            self.motion = None;
        }
        if self.sighting.as_ref().is_some_and(|s| !keep(FreshnessSlot::Sighting, s.observed_at)) {
            self.sighting = None;
        }
        if self
            .computer
            .as_ref()
            .is_some_and(|c| !keep(FreshnessSlot::ComputerSession, c.observed_at))
        {
            self.computer = None;
        }
        self.im.retain(|_, o| keep(FreshnessSlot::Im, o.observed_at));
        // The calendar is kept: dropping it would let an older calendar
        // arriving later take its place.
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admitted {
    /// The observation replaced the slot's previous content.
    Stored,
    /// The slot already held an observation at least as recent.
    Stale,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdmitError {
    #[error("collection of `{kind}` is not enabled for this user")]
    OptInDisabled { kind: AggregatorKind },
    #[error("malformed evidence: {0}")]
    Malformed(#[from] EvidenceError),
    #[error("observed_at {observed_at} is more than 5 s after receive time {received_at}")]
    FutureTimestamp {
        observed_at: Timestamp,
        received_at: Timestamp,
    },
}

/// All retained evidence, keyed by user.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvidenceStore {
    users: BTreeMap<String, UserEvidence>,
}

impl EvidenceStore {
    pub fn new() -> Self {
        EvidenceStore::default()
    }

    pub fn user(&self, user_id: &str) -> Option<&UserEvidence> {
        self.users.get(user_id)
    }

    pub fn users(&self) -> impl Iterator<Item = (&str, &UserEvidence)> {
        self.users.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Installs a user's evidence wholesale, bypassing admission checks.
    /// Intended for generators and fixtures.
    pub fn insert_user(&mut self, user_id: impl Into<String>, evidence: UserEvidence) {
        let user_id = user_id.into();
        if evidence.is_empty() {
            self.users.remove(&user_id);
        } else {
            self.users.insert(user_id, evidence);
        }
    }

    /// Admits one observation for `ev.user_id` under that user's consent.
    ///
    /// Consent is checked before anything else so that a disabled kind is
    /// refused without its payload being inspected.
    pub fn admit(
        &mut self,
        ev: &Evidence,
        optin: &OptInConfig,
        received_at: Timestamp,
    ) -> Result<Admitted, AdmitError> {
        if optin.user_id != ev.user_id || !optin.is_enabled(ev.kind) {
            return Err(AdmitError::OptInDisabled { kind: ev.kind });
        }
        ev.validate()?;
        if ev.observed_at.millis_since(received_at) > FUTURE_TOLERANCE_MS {
            return Err(AdmitError::FutureTimestamp {
                observed_at: ev.observed_at,
                received_at,
            });
        }
        let slots = self.users.entry(ev.user_id.clone()).or_default();
        Ok(slots.admit(&ev.payload, ev.observed_at))
    }

    /// Destroys every retained observation of `kind` for `user_id`.
    pub fn purge_kind(&mut self, user_id: &str, kind: AggregatorKind) {
        if let Some(slots) = self.users.get_mut(user_id) {
            slots.clear_kind(kind);
            if slots.is_empty() {
                self.users.remove(user_id);
            }
        }
    }

    /// Purges every kind the config leaves disabled.
    pub fn apply_opt_in(&mut self, optin: &OptInConfig) {
        for kind in AggregatorKind::ALL {
            if !optin.is_enabled(kind) {
                self.purge_kind(&optin.user_id, kind);
            }
        }
    }

    pub fn remove_user(&mut self, user_id: &str) {
        self.users.remove(user_id);
    }

    /// Drops observations that can no longer influence fusion at `now`.
    pub fn sweep(&mut self, now: Timestamp, policy: &FreshnessPolicy) {
        for slots in self.users.values_mut() {
            slots.sweep(now, policy);
        }
        self.users.retain(|_, slots| !slots.is_empty());
    }
}

/// Fused presence of one user at `now`.
pub fn fuse(
    store: &EvidenceStore,
    user_id: &str,
    now: Timestamp,
    policy: &FreshnessPolicy,
    optin: &OptInConfig,
) -> PresenceState {
    match store.user(user_id) {
        Some(evidence) => fuse_user(evidence, now, policy, optin),
        None => PresenceState::unknown(),
    }
}

/// Rule list, first match wins:
///
/// 1. fresh occupant and visitor motion: in office with a visitor
/// 2. fresh occupant motion: in office
/// 3. fresh device sighting, or a fresh internal-network session with recent input: in the building
/// 4. fresh VPN session with recent input: remote, active
/// 5. fresh VPN session: remote, idle
/// 6. some fresh IM protocol online or away: online only
/// 7. out-of-office calendar event now: out of office
/// 8. unknown
///
/// Evidence of a kind the user has not enabled is ignored even if present.
pub fn fuse_user(
    evidence: &UserEvidence,
    now: Timestamp,
    policy: &FreshnessPolicy,
    optin: &OptInConfig,
) -> PresenceState {
    use PresenceCategory::*;

    let fresh = |kind, slot, at| optin.is_enabled(kind) && is_fresh(slot, at, now, policy);
    let motion = evidence
        .motion
        .as_ref()
        .filter(|m| fresh(AggregatorKind::OfficeVision, FreshnessSlot::Motion, m.observed_at))
        .map(|m| m.payload);
    let sighting = evidence
        .sighting
        .as_ref()
        .filter(|s| fresh(AggregatorKind::DevicePresence, FreshnessSlot::Sighting, s.observed_at));
    let session = evidence
        .computer
        .as_ref()
        .filter(|c| {
            fresh(AggregatorKind::ComputerClient, FreshnessSlot::ComputerSession, c.observed_at)
        })
        .map(|c| &c.payload);
    let input_active = |c: &ComputerActivityPayload| {
        now.millis_since(c.last_input_at) <= policy.input_active_window.as_millis() as i64
    };
    let calendar = evidence
        .calendar
        .as_ref()
        .filter(|_| optin.is_enabled(AggregatorKind::Calendar))
        .map(|c| calendar_now(&c.payload.events, now))
        .unwrap_or_default();
    let im: BTreeMap<Protocol, ImStatus> = evidence
        .im
        .iter()
        .filter(|(_, o)| fresh(AggregatorKind::ImPresence, FreshnessSlot::Im, o.observed_at))
        .map(|(p, o)| (*p, o.payload))
        .collect();

    let category = match motion {
        Some(m) if m.occupant_motion && m.visitor_motion => OfficeWithVisitor,
        Some(m) if m.occupant_motion => Office,
        _ if sighting.is_some()
            || session.is_some_and(|c| c.network_class == NetworkClass::Internal && input_active(c)) =>
        {
            Building
        }
        _ => match session.filter(|c| c.network_class == NetworkClass::Vpn) {
            Some(c) if input_active(c) => RemoteActive,
            Some(_) => RemoteIdle,
            None if im_merge(&im) != ImStatus::Offline => OnlineOnly,
            None if calendar.out_of_office => OutOfOffice,
            None => Unknown,
        },
    };

    let mut state = PresenceState {
        category,
        ..PresenceState::unknown()
    };
    if category == OfficeWithVisitor {
        state.overlays.insert(Overlay::VisitorIcon);
    }
    if calendar.current_meeting {
        state.overlays.insert(Overlay::CalendarIcon);
    }
    if optin.show_location {
        state.location_label = sighting.map(|s| s.payload.location().to_owned());
    }
    state
}

/// One user's new state, as carried by a stream delta.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub user_id: String,
    pub state: PresenceState,
}

/// Users whose state in `new` differs from `old`, in user-id order.
pub fn diff_states(
    old: &BTreeMap<String, PresenceState>,
    new: &BTreeMap<String, PresenceState>,
) -> Vec<StateChange> {
    new.iter()
        .filter(|(user, state)| old.get(*user) != Some(*state))
        .map(|(user, state)| StateChange {
            user_id: user.clone(),
            state: state.clone(),
        })
        .collect()
}

pub fn apply_changes(states: &mut BTreeMap<String, PresenceState>, changes: &[StateChange]) {
    for change in changes {
        states.insert(change.user_id.clone(), change.state.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CalendarEvent, CalendarEventKind, EnabledKinds, ImStatusPayload};
    use proptest::prelude::*;

    const S: i64 = 1000;
    const NOW: Timestamp = Timestamp::from_millis(1_000_000 * S);

    fn ago(secs: i64) -> Timestamp {
        Timestamp::from_millis(NOW.as_millis() - secs * S)
    }

    fn everything(user: &str) -> OptInConfig {
        OptInConfig::all_enabled(user)
    }

    fn sighting(user: &str, at: Timestamp, ap: &str) -> Evidence {
        Evidence::new(
            user,
            "bt",
            at,
            Payload::DeviceSighting(DeviceSightingPayload {
                device_id: "phone".into(),
                ap_id: ap.into(),
                ap_label: format!("near {ap}"),
            }),
        )
    }

    fn motion(user: &str, at: Timestamp, occupant: bool, visitor: bool) -> Evidence {
        Evidence::new(
            user,
            "cam",
            at,
            Payload::OfficeMotion(OfficeMotionPayload {
                occupant_motion: occupant,
                visitor_motion: visitor,
            }),
        )
    }

    fn session(user: &str, at: Timestamp, class: NetworkClass, input: Timestamp) -> Evidence {
        Evidence::new(
            user,
            "pc",
            at,
            Payload::ComputerActivity(ComputerActivityPayload {
                last_input_at: input,
                network_class: class,
                host_id: "pc-1".into(),
            }),
        )
    }

    fn im(user: &str, at: Timestamp, protocol: Protocol, status: ImStatus) -> Evidence {
        Evidence::new(user, "im", at, Payload::ImStatus(ImStatusPayload { protocol, status }))
    }

    fn store_of(evs: &[Evidence], optin: &OptInConfig) -> EvidenceStore {
        let mut store = EvidenceStore::new();
        for ev in evs {
            store.admit(ev, optin, NOW).unwrap();
        }
        store
    }

    fn category(store: &EvidenceStore, optin: &OptInConfig) -> PresenceCategory {
        fuse(store, &optin.user_id, NOW, &FreshnessPolicy::default(), optin).category
    }

    #[test]
    fn freshness_boundaries() {
        let p = FreshnessPolicy::default();
        assert!(is_fresh(FreshnessSlot::Motion, ago(100), NOW, &p));
        assert!(!is_fresh(FreshnessSlot::Motion, ago(301), NOW, &p));
        assert!(is_fresh(FreshnessSlot::Sighting, ago(600), NOW, &p));
        assert!(!is_fresh(FreshnessSlot::Sighting, Timestamp::from_millis(ago(600).as_millis() - 1), NOW, &p));
    }

    #[test]
    fn admit_inserts_when_enabled() {
        let optin = everything("alice");
        let mut store = EvidenceStore::new();
        assert_eq!(store.admit(&sighting("alice", ago(1), "ap1"), &optin, NOW), Ok(Admitted::Stored));
        assert_eq!(store.user("alice").unwrap().sighting.as_ref().unwrap().payload.ap_id, "ap1");
    }

    #[test]
    fn admit_refuses_disabled_kind_without_touching_store() {
        let optin = OptInConfig {
            enabled: EnabledKinds::ALL.with(AggregatorKind::DevicePresence, false),
            ..everything("alice")
        };
        let mut store = store_of(&[motion("alice", ago(5), true, false)], &optin);
        let before = store.clone();
        assert_eq!(
            store.admit(&sighting("alice", ago(1), "ap1"), &optin, NOW),
            Err(AdmitError::OptInDisabled { kind: AggregatorKind::DevicePresence })
        );
        assert_eq!(store, before);
    }

    #[test]
    fn older_observation_never_replaces_newer() {
        let optin = everything("alice");
        let t100 = Timestamp::from_millis(100 * S);
        let t50 = Timestamp::from_millis(50 * S);
        let mut store = store_of(&[sighting("alice", t100, "new")], &optin);
        assert_eq!(store.admit(&sighting("alice", t50, "old"), &optin, NOW), Ok(Admitted::Stale));
        let kept = store.user("alice").unwrap().sighting.clone().unwrap();
        assert_eq!((kept.observed_at, kept.payload.ap_id.as_str()), (t100, "new"));
    }

    #[test]
    fn im_slots_are_per_protocol() {
        let optin = everything("alice");
        let store = store_of(
            &[
                im("alice", ago(10), Protocol::Skype, ImStatus::Online),
                im("alice", ago(5), Protocol::Jabber, ImStatus::Away),
                im("alice", ago(20), Protocol::Skype, ImStatus::Offline),
            ],
            &optin,
        );
        let slots = &store.user("alice").unwrap().im;
        assert_eq!(slots.len(), 2);
        assert_eq!(slots[&Protocol::Skype].payload, ImStatus::Online);
    }

    #[test]
    fn rejects_future_and_malformed() {
        let optin = everything("alice");
        let mut store = EvidenceStore::new();
        let future = sighting("alice", Timestamp::from_millis(NOW.as_millis() + 5_001), "ap");
        assert!(matches!(
            store.admit(&future, &optin, NOW),
            Err(AdmitError::FutureTimestamp { .. })
        ));
        let within = sighting("alice", Timestamp::from_millis(NOW.as_millis() + 5_000), "ap");
        assert_eq!(store.admit(&within, &optin, NOW), Ok(Admitted::Stored));
        let blank_ap = sighting("alice", ago(1), "");
        assert!(matches!(store.admit(&blank_ap, &optin, NOW), Err(AdmitError::Malformed(_))));
    }

    #[test]
    fn im_and_sighting_degrade_to_building() {
        let optin = everything("alice");
        let store = store_of(
            &[
                im("alice", ago(10), Protocol::Skype, ImStatus::Online),
                im("alice", ago(10), Protocol::GoogleTalk, ImStatus::Online),
                sighting("alice", ago(30), "ap-2"),
            ],
            &optin,
        );
        let state = fuse(&store, "alice", NOW, &FreshnessPolicy::default(), &optin);
        assert_eq!(state.category, PresenceCategory::Building);
        assert_eq!(state.location_label.as_deref(), Some("near ap-2"));
    }

    #[test]
    fn motion_rules() {
        let optin = everything("alice");
        assert_eq!(
            category(&store_of(&[motion("alice", ago(5), true, false)], &optin), &optin),
            PresenceCategory::Office
        );
        let both = store_of(&[motion("alice", ago(5), true, true)], &optin);
        let state = fuse(&both, "alice", NOW, &FreshnessPolicy::default(), &optin);
        assert_eq!(state.category, PresenceCategory::OfficeWithVisitor);
        assert!(state.overlays.contains(&Overlay::VisitorIcon));
        assert_eq!(
            category(&store_of(&[motion("alice", ago(5), false, true)], &optin), &optin),
            PresenceCategory::Unknown
        );
    }

    #[test]
    fn vpn_activity_window() {
        let optin = everything("alice");
        let active = store_of(&[session("alice", ago(5), NetworkClass::Vpn, ago(10))], &optin);
        assert_eq!(category(&active, &optin), PresenceCategory::RemoteActive);
        let idle = store_of(&[session("alice", ago(5), NetworkClass::Vpn, ago(400))], &optin);
        assert_eq!(category(&idle, &optin), PresenceCategory::RemoteIdle);
    }

    #[test]
    fn internal_session_needs_recent_input() {
        let optin = everything("alice");
        let active = store_of(&[session("alice", ago(5), NetworkClass::Internal, ago(10))], &optin);
        assert_eq!(category(&active, &optin), PresenceCategory::Building);
        let idle = store_of(&[session("alice", ago(5), NetworkClass::Internal, ago(400))], &optin);
        assert_eq!(category(&idle, &optin), PresenceCategory::Unknown);
    }

    #[test]
    fn empty_store_is_unknown() {
        let optin = everything("alice");
        assert_eq!(fuse(&EvidenceStore::new(), "alice", NOW, &FreshnessPolicy::default(), &optin), PresenceState::unknown());
    }

    #[test]
    fn location_needs_show_location() {
        let mut optin = everything("alice");
        optin.show_location = false;
        let store = store_of(&[sighting("alice", ago(5), "ap")], &optin);
        assert_eq!(fuse(&store, "alice", NOW, &FreshnessPolicy::default(), &optin).location_label, None);
    }

    #[test]
    fn purge_is_destructive() {
        let optin = everything("alice");
        let mut store = store_of(&[motion("alice", ago(5), true, false), sighting("alice", ago(5), "ap")], &optin);
        let mut off = optin.clone();
        off.enabled.set(AggregatorKind::OfficeVision, false);
        store.apply_opt_in(&off);
        assert_eq!(category(&store, &off), PresenceCategory::Building);
        // Re-enabling does not resurrect purged evidence.
        assert_eq!(category(&store, &optin), PresenceCategory::Building);
        assert!(store.user("alice").unwrap().motion.is_none());
    }

    #[test]
    fn sweep_examples() {
        let optin = everything("alice");
        let mut old = store_of(&[sighting("alice", ago(700), "ap")], &optin);
        old.sweep(NOW, &FreshnessPolicy::default());
        assert!(old.is_empty());

        // An ended calendar stays, so an older one cannot slip in behind it.
        let ended = CalendarPayload {
            events: vec![CalendarEvent { start: ago(600), end: ago(300), kind: CalendarEventKind::Meeting, title: None }],
        };
        let mut cal = store_of(&[Evidence::new("alice", "cal", ago(10), Payload::Calendar(ended))], &optin);
        cal.sweep(NOW, &FreshnessPolicy::default());
        assert!(cal.user("alice").is_some_and(|e| e.calendar.is_some()));

        let fresh = store_of(&[sighting("alice", ago(10), "ap"), motion("alice", ago(10), true, false)], &optin);
        let mut swept = fresh.clone();
        swept.sweep(NOW, &FreshnessPolicy::default());
        assert_eq!(swept, fresh);
    }

    #[test]
    fn diff_examples() {
        let office = PresenceState { category: PresenceCategory::Office, ..PresenceState::unknown() };
        let building = PresenceState { category: PresenceCategory::Building, ..PresenceState::unknown() };
        let old = BTreeMap::from([("a".to_string(), office.clone()), ("b".to_string(), office.clone())]);
        assert!(diff_states(&old, &old).is_empty());
        let mut new = old.clone();
        new.insert("a".into(), building.clone());
        assert_eq!(diff_states(&old, &new), vec![StateChange { user_id: "a".into(), state: building }]);
    }

    // --- property tests -------------------------------------------------

    fn ts(range: std::ops::Range<i64>) -> impl Strategy<Value = Timestamp> {
        range.prop_map(ago)
    }

    fn user_evidence() -> impl Strategy<Value = UserEvidence> {
        let motion = prop::option::of((any::<bool>(), any::<bool>(), ts(0..900))).prop_map(|m| {
            m.map(|(o, v, at)| Observed::new(OfficeMotionPayload { occupant_motion: o, visitor_motion: v }, at))
        });
        let sighting = prop::option::of(ts(0..1200)).prop_map(|s| {
            s.map(|at| {
                Observed::new(
                    DeviceSightingPayload { device_id: "d".into(), ap_id: "ap".into(), ap_label: "lobby".into() },
                    at,
                )
            })
        });
        let computer = prop::option::of((any::<bool>(), 0i64..1200, 0i64..900)).prop_map(|c| {
            c.map(|(vpn, obs, extra)| {
                let at = ago(obs);
                Observed::new(
                    ComputerActivityPayload {
                        last_input_at: ago(obs + extra),
                        network_class: if vpn { NetworkClass::Vpn } else { NetworkClass::Internal },
                        host_id: "h".into(),
                    },
                    at,
                )
            })
        });
        let calendar = prop::option::of(prop::collection::vec((0usize..6, -3000i64..3000, 1i64..4000), 0..3))
            .prop_map(|c| {
                c.map(|evs| {
                    let kinds = [
                        CalendarEventKind::Meeting,
                        CalendarEventKind::Vacation,
                        CalendarEventKind::Sick,
                        CalendarEventKind::Travel,
                        CalendarEventKind::WorkFromHome,
                        CalendarEventKind::Other,
                    ];
                    let events = evs
                        .into_iter()
                        .map(|(k, start, len)| CalendarEvent {
                            start: ago(start),
                            end: ago(start - len),
                            kind: kinds[k],
                            title: None,
                        })
                        .collect();
                    Observed::new(CalendarPayload { events }, ago(4000))
                })
            });
        let im = prop::collection::btree_map(
            prop::sample::select(Protocol::ALL.to_vec()),
            (prop::sample::select(vec![ImStatus::Online, ImStatus::Away, ImStatus::Offline]), ts(0..300)),
            0..4,
        )
        .prop_map(|m| m.into_iter().map(|(p, (s, at))| (p, Observed::new(s, at))).collect());
        (motion, sighting, computer, calendar, im).prop_map(|(motion, sighting, computer, calendar, im)| {
            UserEvidence { motion, sighting, computer, calendar, im }
        })
    }

    fn optin() -> impl Strategy<Value = OptInConfig> {
        (prop::array::uniform5(any::<bool>()), any::<bool>()).prop_map(|(flags, show_location)| {
            let mut enabled = EnabledKinds::NONE;
            for (kind, on) in AggregatorKind::ALL.into_iter().zip(flags) {
                enabled.set(kind, on);
            }
            OptInConfig { user_id: "u".into(), enabled, show_location }
        })
    }

    fn kind() -> impl Strategy<Value = AggregatorKind> {
        prop::sample::select(AggregatorKind::ALL.to_vec())
    }

    fn constant_calendar(ev: &UserEvidence, from: Timestamp, to: Timestamp) -> bool {
        ev.calendar.as_ref().is_none_or(|c| {
            c.payload.events.iter().all(|e| (e.start <= from && e.end > to) || e.end <= from || e.start > to)
        })
    }

    proptest! {
        #[test]
        fn sweep_is_fusion_invariant(ev in user_evidence(), optin in optin()) {
            let policy = FreshnessPolicy::default();
            let mut store = EvidenceStore::new();
            store.insert_user("u", ev);
            let before = fuse(&store, "u", NOW, &policy, &optin);
            store.sweep(NOW, &policy);
            prop_assert_eq!(fuse(&store, "u", NOW, &policy, &optin), before);
        }

        #[test]
        fn sweeping_between_admits_changes_nothing(
            evs in prop::collection::vec((kind(), 0i64..1500, -400i64..400, any::<bool>()), 0..12),
            optin in optin(),
        ) {
            let policy = FreshnessPolicy::default();
            let mut plain = EvidenceStore::new();
            let mut swept = EvidenceStore::new();
            for (kind, age, event_start, sweep_first) in evs {
                let at = ago(age);
                let ev = match kind {
                    AggregatorKind::OfficeVision => motion("u", at, true, event_start > 0),
                    AggregatorKind::DevicePresence => sighting("u", at, "ap"),
                    AggregatorKind::ComputerClient => session("u", at, NetworkClass::Internal, at),
                    AggregatorKind::Calendar => {
                        let event = CalendarEvent {
                            start: ago(event_start + 300),
                            end: ago(event_start),
                            kind: CalendarEventKind::Meeting,
                            title: None,
                        };
                        Evidence::new("u", "cal", at, Payload::Calendar(CalendarPayload { events: vec![event] }))
                    }
                    AggregatorKind::ImPresence => im("u", at, Protocol::Skype, ImStatus::Online),
                };
                if sweep_first {
                    swept.sweep(NOW, &policy);
                }
                let a = plain.admit(&ev, &optin, NOW);
                let b = swept.admit(&ev, &optin, NOW);
                prop_assert_eq!(a.is_ok(), b.is_ok());
            }
            prop_assert_eq!(fuse(&plain, "u", NOW, &policy, &optin), fuse(&swept, "u", NOW, &policy, &optin));
        }

        #[test]
        fn disabled_kinds_are_invisible(ev in user_evidence(), optin in optin(), k in kind()) {
            let policy = FreshnessPolicy::default();
            let mut off = optin.clone();
            off.enabled.set(k, false);
            let mut full = EvidenceStore::new();
            full.insert_user("u", ev.clone());
            let mut stripped = ev;
            stripped.clear_kind(k);
            let mut without = EvidenceStore::new();
            without.insert_user("u", stripped);
            prop_assert_eq!(fuse(&full, "u", NOW, &policy, &off), fuse(&without, "u", NOW, &policy, &off));
        }

        #[test]
        fn category_only_generalizes_as_time_passes(ev in user_evidence(), optin in optin(), step in 1i64..2000) {
            let policy = FreshnessPolicy::default();
            let later = NOW + Duration::from_secs(step as u64);
            // Calendar events that begin later are scheduled plans, not decay;
            // restrict to calendars whose verdict is constant over the window.
            prop_assume!(constant_calendar(&ev, NOW, later));
            let mut store = EvidenceStore::new();
            store.insert_user("u", ev);
            let a = fuse(&store, "u", NOW, &policy, &optin).category;
            let b = fuse(&store, "u", later, &policy, &optin).category;
            prop_assert!(b >= a, "{:?} -> {:?}", a, b);
        }

        #[test]
        fn admit_then_disable_leaves_no_trace(evs in prop::collection::vec((kind(), 0i64..600), 0..12), k in kind()) {
            let optin = OptInConfig::all_enabled("u");
            let mut store = EvidenceStore::new();
            for (kind, age) in evs {
                let at = ago(age);
                let ev = match kind {
                    AggregatorKind::OfficeVision => motion("u", at, true, false),
                    AggregatorKind::DevicePresence => sighting("u", at, "ap"),
                    AggregatorKind::ComputerClient => session("u", at, NetworkClass::Vpn, at),
                    AggregatorKind::Calendar => Evidence::new("u", "cal", at, Payload::Calendar(CalendarPayload::default())),
                    AggregatorKind::ImPresence => im("u", at, Protocol::Skype, ImStatus::Online),
                };
                store.admit(&ev, &optin, NOW).unwrap();
            }
            let mut off = optin.clone();
            off.enabled.set(k, false);
            store.apply_opt_in(&off);
            prop_assert!(store.user("u").is_none_or(|e| !e.has_kind(k)));
        }

        #[test]
        fn diff_round_trips(
            old in prop::collection::btree_map("[a-e]", prop::sample::select(PresenceCategory::ALL.to_vec()), 0..5),
            flips in prop::collection::vec(prop::sample::select(PresenceCategory::ALL.to_vec()), 5)
        ) {
            let to_state = |c| PresenceState { category: c, ..PresenceState::unknown() };
            let old: BTreeMap<String, PresenceState> = old.into_iter().map(|(u, c)| (u, to_state(c))).collect();
            let new: BTreeMap<String, PresenceState> =
                old.keys().zip(flips).map(|(u, c)| (u.clone(), to_state(c))).collect();
            let changes = diff_states(&old, &new);
            let mut folded = old.clone();
            apply_changes(&mut folded, &changes);
            prop_assert_eq!(&folded, &new);
            let changed = old.iter().filter(|(u, s)| new[*u] != **s).count();
            prop_assert_eq!(changes.len(), changed);
        }
    }
}
