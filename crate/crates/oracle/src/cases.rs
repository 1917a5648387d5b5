//! Evidence stores to evaluate fusion on: a full enumeration of qualitative
//! combinations and a seeded random sampler that leans on TTL boundaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use presence_core::{
    AggregatorKind, CalendarEvent, CalendarEventKind, CalendarPayload, ComputerActivityPayload,
    DeviceSightingPayload, EnabledKinds, EvidenceStore, FreshnessPolicy, ImStatus, NetworkClass,
    Observed, OfficeMotionPayload, OptInConfig, Protocol, Timestamp, UserEvidence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const USER: &str = "worker";

/// 2024-05-06T12:00:00Z
pub const BASE_NOW: Timestamp = Timestamp::from_millis(1_714_996_800_000);

/// One fusion input.
#[derive(Debug, Clone)]
pub struct Case {
    pub label: String,
    pub store: EvidenceStore,
    pub user_id: String,
    pub now: Timestamp,
    pub policy: FreshnessPolicy,
    pub optin: OptInConfig,
}

impl Case {
    pub fn evidence(&self) -> UserEvidence {
        self.store.user(&self.user_id).cloned().unwrap_or_default()
    }

    /// Replaces the case's evidence, keeping everything else.
    pub fn with_evidence(&self, evidence: UserEvidence) -> Case {
        let mut store = EvidenceStore::new();
        store.insert_user(self.user_id.clone(), evidence);
        Case { store, ..self.clone() }
    }
}

fn ago(now: Timestamp, secs: u64) -> Timestamp {
    now - Duration::from_secs(secs)
}

fn sighting_payload(ap: &str, label: &str) -> DeviceSightingPayload {
    DeviceSightingPayload {
        device_id: "phone-1".into(),
        ap_id: ap.into(),
        ap_label: label.into(),
    }
}

pub const MOTION_STATES: [&str; 4] = ["absent", "occupant", "visitor-only", "occupant+visitor"];
pub const SIGHTING_STATES: [&str; 3] = ["absent", "fresh", "stale"];
pub const COMPUTER_STATES: [&str; 6] =
    ["absent", "internal-active", "internal-idle", "vpn-active", "vpn-idle", "stale"];
pub const IM_STATES: [&str; 3] = ["absent", "online", "away"];
pub const CALENDAR_STATES: [&str; 3] = ["none", "meeting", "ooo"];

/// Every combination of the qualitative evidence states, with all kinds
/// enabled and both settings of `show_location`: 4 x 3 x 6 x 3 x 3 x 2 = 1296.
pub fn exhaustive() -> Vec<Case> {
    let policy = FreshnessPolicy::default();
    let now = BASE_NOW;
    let mut out = Vec::with_capacity(1296);
    for motion in MOTION_STATES {
        for sighting in SIGHTING_STATES {
            for computer in COMPUTER_STATES {
                for im in IM_STATES {
                    for calendar in CALENDAR_STATES {
                        for show_location in [false, true] {
                            let ev = UserEvidence {
                                motion: motion_state(motion, now),
                                sighting: sighting_state(sighting, now, &policy),
                                computer: computer_state(computer, now, &policy),
                                calendar: calendar_state(calendar, now),
                                im: im_state(im, now),
                            };
                            let mut store = EvidenceStore::new();
                            store.insert_user(USER, ev);
                            out.push(Case {
                                label: format!(
                                    "motion={motion} sighting={sighting} computer={computer} \
                                     im={im} calendar={calendar} show_location={show_location}"
                                ),
                                store,
                                user_id: USER.into(),
                                now,
                                policy,
                                optin: OptInConfig {
                                    user_id: USER.into(),
                                    enabled: EnabledKinds::ALL,
                                    show_location,
                                },
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn motion_state(state: &str, now: Timestamp) -> Option<Observed<OfficeMotionPayload>> {
    let (occupant, visitor) = match state {
        "absent" => return None,
        "occupant" => (true, false),
        "visitor-only" => (false, true),
        _ => (true, true),
    };
    Some(Observed::new(
        OfficeMotionPayload { occupant_motion: occupant, visitor_motion: visitor },
        ago(now, 60),
    ))
}

fn sighting_state(
    state: &str,
    now: Timestamp,
    policy: &FreshnessPolicy,
) -> Option<Observed<DeviceSightingPayload>> {
    let at = match state {
        "absent" => return None,
        "fresh" => ago(now, 30),
        _ => now - policy.sighting_ttl - Duration::from_secs(60),
    };
    Some(Observed::new(sighting_payload("ap-7", "near the kitchen"), at))
}

fn computer_state(
    state: &str,
    now: Timestamp,
    policy: &FreshnessPolicy,
) -> Option<Observed<ComputerActivityPayload>> {
    let idle = policy.input_active_window + Duration::from_secs(100);
    let (class, observed_at, last_input_at) = match state {
        "absent" => return None,
        "internal-active" => (NetworkClass::Internal, ago(now, 20), ago(now, 25)),
        "internal-idle" => (NetworkClass::Internal, ago(now, 20), ago(now, 20) - idle),
        "vpn-active" => (NetworkClass::Vpn, ago(now, 20), ago(now, 25)),
        "vpn-idle" => (NetworkClass::Vpn, ago(now, 20), ago(now, 20) - idle),
        _ => {
            let at = now - policy.computer_session_ttl - Duration::from_secs(60);
            (NetworkClass::Vpn, at, at)
        }
    };
    Some(Observed::new(
        ComputerActivityPayload { last_input_at, network_class: class, host_id: "desk-1".into() },
        observed_at,
    ))
}

fn im_state(state: &str, now: Timestamp) -> BTreeMap<Protocol, Observed<ImStatus>> {
    match state {
        "online" => BTreeMap::from([
            (Protocol::Skype, Observed::new(ImStatus::Online, ago(now, 15))),
            (Protocol::Jabber, Observed::new(ImStatus::Offline, ago(now, 15))),
        ]),
        "away" => BTreeMap::from([(Protocol::Jabber, Observed::new(ImStatus::Away, ago(now, 15)))]),
        _ => BTreeMap::new(),
    }
}

fn calendar_state(state: &str, now: Timestamp) -> Option<Observed<CalendarPayload>> {
    let kind = match state {
        "meeting" => CalendarEventKind::Meeting,
        "ooo" => CalendarEventKind::Vacation,
        _ => return None,
    };
    Some(Observed::new(
        CalendarPayload {
            events: vec![CalendarEvent {
                start: ago(now, 1800),
                end: now + Duration::from_secs(1800),
                kind,
                title: None,
            }],
        },
        ago(now, 3600),
    ))
}

const CAL_KINDS: [CalendarEventKind; 6] = [
    CalendarEventKind::Meeting,
    CalendarEventKind::Vacation,
    CalendarEventKind::Sick,
    CalendarEventKind::Travel,
    CalendarEventKind::WorkFromHome,
    CalendarEventKind::Other,
];

/// Offset in milliseconds around `ttl`: often exactly on, or one off, the boundary.
fn boundary_age(rng: &mut impl Rng, ttl: Duration) -> i64 {
    let ttl = ttl.as_millis() as i64;
    match rng.gen_range(0..6) {
        0 => ttl,
        1 => ttl + 1,
        2 => ttl - 1,
        3 => -rng.gen_range(0..=5_000),
        _ => rng.gen_range(0..=2 * ttl),
    }
}

fn at_age(now: Timestamp, age_ms: i64) -> Timestamp {
    Timestamp::from_millis(now.as_millis() - age_ms)
}

fn random_policy(rng: &mut impl Rng) -> FreshnessPolicy {
    if rng.gen_bool(0.5) {
        return FreshnessPolicy::default();
    }
    let mut d = || Duration::from_millis(rng.gen_range(1_000..=900_000));
    FreshnessPolicy {
        motion_ttl: d(),
        sighting_ttl: d(),
        input_active_window: d(),
        computer_session_ttl: d(),
        im_ttl: d(),
    }
}

/// One random store for one user, with random consent and clock.
pub fn random_case(rng: &mut impl Rng, index: usize) -> Case {
    let policy = random_policy(rng);
    let now = BASE_NOW + Duration::from_millis(rng.gen_range(0..86_400_000));
    let mut ev = UserEvidence::default();
    let mut desc = String::new();

    if rng.gen_bool(0.6) {
        let age = boundary_age(rng, policy.motion_ttl);
        let payload = OfficeMotionPayload {
            occupant_motion: rng.gen_bool(0.6),
            visitor_motion: rng.gen_bool(0.5),
        };
        let _ = write!(desc, " motion({}{},{age}ms)", payload.occupant_motion as u8, payload.visitor_motion as u8);
        ev.motion = Some(Observed::new(payload, at_age(now, age)));
    }
    if rng.gen_bool(0.5) {
        let age = boundary_age(rng, policy.sighting_ttl);
        let label = if rng.gen_bool(0.2) { "" } else { "near lab 2" };
        let _ = write!(desc, " sighting({age}ms)");
        ev.sighting = Some(Observed::new(sighting_payload("ap-2", label), at_age(now, age)));
    }
    if rng.gen_bool(0.6) {
        let age = boundary_age(rng, policy.computer_session_ttl);
        let observed_at = at_age(now, age);
        let input_age = boundary_age(rng, policy.input_active_window).max(age);
        let class = if rng.gen_bool(0.5) { NetworkClass::Internal } else { NetworkClass::Vpn };
        let _ = write!(desc, " computer({class:?},{age}ms,input {input_age}ms)");
        ev.computer = Some(Observed::new(
            ComputerActivityPayload {
                last_input_at: at_age(now, input_age),
                network_class: class,
                host_id: "desk-9".into(),
            },
            observed_at,
        ));
    }
    for protocol in Protocol::ALL {
        if rng.gen_bool(0.3) {
            let status = [ImStatus::Online, ImStatus::Away, ImStatus::Offline][rng.gen_range(0..3)];
            let age = boundary_age(rng, policy.im_ttl);
            let _ = write!(desc, " im({protocol},{status:?},{age}ms)");
            ev.im.insert(protocol, Observed::new(status, at_age(now, age)));
        }
    }
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(0..=3);
        let events = (0..n)
            .map(|_| {
                // Starts and ends land on `now` itself a fair share of the time.
                let start = match rng.gen_range(0..4) {
                    0 => 0,
                    _ => rng.gen_range(-7_200_000..7_200_000),
                };
                let len = match rng.gen_range(0..4) {
                    0 => -start,
                    _ => rng.gen_range(1..7_200_000),
                }
                .max(1);
                CalendarEvent {
                    start: at_age(now, -start),
                    end: at_age(now, -(start + len)),
                    kind: CAL_KINDS[rng.gen_range(0..CAL_KINDS.len())],
                    title: None,
                }
            })
            .collect::<Vec<_>>();
        let _ = write!(desc, " calendar({} events)", events.len());
        ev.calendar = Some(Observed::new(CalendarPayload { events }, at_age(now, 3_600_000)));
    }

    let mut enabled = EnabledKinds::NONE;
    for kind in AggregatorKind::ALL {
        enabled.set(kind, rng.gen_bool(0.8));
    }
    let show_location = rng.gen_bool(0.5);
    let mut store = EvidenceStore::new();
    store.insert_user(USER, ev);
    Case {
        label: format!("random #{index}:{desc}"),
        store,
        user_id: USER.into(),
        now,
        policy,
        optin: OptInConfig { user_id: USER.into(), enabled, show_location },
    }
}

/// `count` random cases, reproducible from `seed`.
pub fn random_cases(seed: u64, count: usize) -> impl Iterator<Item = Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(move |i| random_case(&mut rng, i))
}
