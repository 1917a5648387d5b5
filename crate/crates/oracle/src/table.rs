use presence_core::{
    AggregatorKind, CalendarEventKind, EvidenceStore, FreshnessPolicy, ImStatus, NetworkClass,
    OptInConfig, Overlay, PresenceCategory, PresenceState, Timestamp, UserEvidence,
};

/// Boolean features of one user's evidence at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Facts {
    pub occupant: bool,
    pub visitor: bool,
    pub sighting: bool,
    pub internal_active: bool,
    pub vpn_session: bool,
    pub vpn_active: bool,
    pub im_present: bool,
    pub out_of_office: bool,
    pub meeting: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Need {
    Yes,
    Any,
}

#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub occupant: Need,
    pub visitor: Need,
    pub sighting: Need,
    pub internal_active: Need,
    pub vpn_active: Need,
    pub vpn_session: Need,
    pub im_present: Need,
    pub out_of_office: Need,
    pub category: PresenceCategory,
}

const ANY: Row = Row {
    occupant: Need::Any,
    visitor: Need::Any,
    sighting: Need::Any,
    internal_active: Need::Any,
    vpn_active: Need::Any,
    vpn_session: Need::Any,
    im_present: Need::Any,
    out_of_office: Need::Any,
    category: PresenceCategory::Unknown,
};

use Need::Yes;
use PresenceCategory as C;

/// First matching row decides the category.
pub const RULE_TABLE: [Row; 9] = [
    Row { occupant: Yes, visitor: Yes, category: C::OfficeWithVisitor, ..ANY },
    Row { occupant: Yes, category: C::Office, ..ANY },
    Row { sighting: Yes, category: C::Building, ..ANY },
    Row { internal_active: Yes, category: C::Building, ..ANY },
    Row { vpn_active: Yes, category: C::RemoteActive, ..ANY },
    Row { vpn_session: Yes, category: C::RemoteIdle, ..ANY },
    Row { im_present: Yes, category: C::OnlineOnly, ..ANY },
    Row { out_of_office: Yes, category: C::OutOfOffice, ..ANY },
    ANY,
];

impl Row {
    fn matches(&self, f: &Facts) -> bool {
        let ok = |need: Need, have: bool| need == Need::Any || have;
        ok(self.occupant, f.occupant)
            && ok(self.visitor, f.visitor)
            && ok(self.sighting, f.sighting)
            && ok(self.internal_active, f.internal_active)
            && ok(self.vpn_active, f.vpn_active)
            && ok(self.vpn_session, f.vpn_session)
            && ok(self.im_present, f.im_present)
            && ok(self.out_of_office, f.out_of_office)
    }
}

fn within(now: Timestamp, at: Timestamp, window_ms: u128) -> bool {
    let age = now.as_millis() as i128 - at.as_millis() as i128;
    age <= window_ms as i128
}

pub fn facts(
    ev: &UserEvidence,
    now: Timestamp,
    policy: &FreshnessPolicy,
    optin: &OptInConfig,
) -> Facts {
    let on = |k| optin.enabled.get(k);
    let mut f = Facts::default();

    if let Some(m) = &ev.motion {
        if on(AggregatorKind::OfficeVision) && within(now, m.observed_at, policy.motion_ttl.as_millis()) {
            f.occupant = m.payload.occupant_motion;
            f.visitor = m.payload.visitor_motion;
        }
    }
    if let Some(s) = &ev.sighting {
        f.sighting = on(AggregatorKind::DevicePresence)
            && within(now, s.observed_at, policy.sighting_ttl.as_millis());
    }
    if let Some(c) = &ev.computer {
        let session = on(AggregatorKind::ComputerClient)
            && within(now, c.observed_at, policy.computer_session_ttl.as_millis());
        let input = within(now, c.payload.last_input_at, policy.input_active_window.as_millis());
        match c.payload.network_class {
            NetworkClass::Internal => f.internal_active = session && input,
            NetworkClass::Vpn => {
                f.vpn_session = session;
                f.vpn_active = session && input;
            }
        }
    }
    if on(AggregatorKind::ImPresence) {
        f.im_present = ev.im.values().any(|o| {
            o.payload != ImStatus::Offline && within(now, o.observed_at, policy.im_ttl.as_millis())
        });
    }
    if let (true, Some(cal)) = (on(AggregatorKind::Calendar), &ev.calendar) {
        for e in cal.payload.events.iter().filter(|e| e.start <= now && now < e.end) {
            match e.kind {
                CalendarEventKind::Vacation
                | CalendarEventKind::Sick
                | CalendarEventKind::Travel
                | CalendarEventKind::WorkFromHome => f.out_of_office = true,
                CalendarEventKind::Meeting | CalendarEventKind::Other => f.meeting = true,
            }
        }
    }
    f
}

/// What fusion must return for `user_id`.
pub fn expected_state(
    store: &EvidenceStore,
    user_id: &str,
    now: Timestamp,
    policy: &FreshnessPolicy,
    optin: &OptInConfig,
) -> PresenceState {
    let empty = UserEvidence::default();
    let ev = store.user(user_id).unwrap_or(&empty);
    let f = facts(ev, now, policy, optin);
    let category = RULE_TABLE
        .iter()
        .find(|row| row.matches(&f))
        .map(|row| row.category)
        .unwrap_or(PresenceCategory::Unknown);

    let mut state = PresenceState::unknown();
    state.category = category;
    if category == PresenceCategory::OfficeWithVisitor {
        state.overlays.insert(Overlay::VisitorIcon);
    }
    if f.meeting {
        state.overlays.insert(Overlay::CalendarIcon);
    }
    if f.sighting && optin.show_location {
        let s = &ev.sighting.as_ref().expect("sighting fact implies slot").payload;
        let label = if s.ap_label.is_empty() { &s.ap_id } else { &s.ap_label };
        state.location_label = Some(label.clone());
    }
    state
}

/// Evidence kinds whose presence can license `category`.
pub fn licensing_kinds(category: PresenceCategory) -> &'static [AggregatorKind] {
    match category {
        C::OfficeWithVisitor | C::Office => &[AggregatorKind::OfficeVision],
        C::Building => &[AggregatorKind::DevicePresence, AggregatorKind::ComputerClient],
        C::RemoteActive | C::RemoteIdle => &[AggregatorKind::ComputerClient],
        C::OnlineOnly => &[AggregatorKind::ImPresence],
        C::OutOfOffice => &[AggregatorKind::Calendar],
        C::Unknown => &[],
    }
}

/// Copy of `ev` with the evidence that licensed `category` removed.
pub fn ablate(ev: &UserEvidence, category: PresenceCategory) -> UserEvidence {
    let mut out = ev.clone();
    for &kind in licensing_kinds(category) {
        out.clear_kind(kind);
    }
    out
}
