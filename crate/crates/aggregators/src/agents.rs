//! Polling loops for the five file-backed aggregators.
//!
//! Every tick an agent fetches its allow-list, collects only for users on
//! it, and checks each record against the list again before sending.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use presence_core::{
    AggregatorKind, Evidence, NetworkConfig, Payload, Timestamp,
};
use serde::Deserialize;
use thiserror::Error;
use tracing::{debug, warn};

use crate::calendar::parse_calendar;
use crate::computer::probe_computer;
use crate::im::poll_im;
use crate::motion::{motion_detect, Frame, MotionParams, Region};
use crate::sightings::reduce_sightings;
use crate::transport::{PostOutcome, Transport, TransportError};

pub const VISION_CADENCE: Duration = Duration::from_secs(5);
pub const DEVICE_CADENCE: Duration = Duration::from_secs(60);
pub const COMPUTER_CADENCE: Duration = Duration::from_secs(30);
pub const CALENDAR_CADENCE: Duration = Duration::from_secs(300);
pub const IM_CADENCE: Duration = Duration::from_secs(15);

pub trait Aggregator: Send {
    fn kind(&self) -> AggregatorKind;

    fn cadence(&self) -> Duration;

    /// Evidence for users in `allowed` only. Sources belonging to anyone
    /// else are not read.
    fn collect(&mut self, now: Timestamp, allowed: &BTreeSet<String>) -> Vec<Evidence>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TickReport {
    pub posted: usize,
    pub rejected: usize,
}

/// One poll cycle: allow-list, collect, send.
pub async fn run_tick(
    agent: &mut dyn Aggregator,
    transport: &dyn Transport,
    now: Timestamp,
) -> Result<TickReport, TransportError> {
    let allowed: BTreeSet<String> = transport.allow_list(agent.kind()).await?.into_iter().collect();
    let mut report = TickReport::default();
    for ev in agent.collect(now, &allowed) {
        if ev.kind != agent.kind() || !allowed.contains(&ev.user_id) {
            warn!(user = %ev.user_id, kind = %ev.kind, "dropping evidence outside the allow-list");
            continue;
        }
        report.posted += 1;
        if let PostOutcome::Rejected { status, reason } = transport.post_evidence(&ev).await? {
            debug!(status, %reason, user = %ev.user_id, "evidence rejected");
            report.rejected += 1;
        }
    }
    Ok(report)
}

/// Runs `ticks` cycles at the agent's cadence, reading time from `clock`.
pub async fn run_agent(
    agent: &mut dyn Aggregator,
    transport: &dyn Transport,
    ticks: usize,
    clock: impl Fn() -> Timestamp,
) -> TickReport {
    let mut total = TickReport::default();
    let mut interval = tokio::time::interval(agent.cadence());
    for _ in 0..ticks {
        interval.tick().await;
        match run_tick(agent, transport, clock()).await {
            Ok(r) => {
                total.posted += r.posted;
                total.rejected += r.rejected;
            }
            Err(e) => warn!(kind = %agent.kind(), error = %e, "poll failed"),
        }
    }
    total
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| SimError::Json { path: path.to_owned(), source })
}

/// Office camera: consecutive PGM frames from `frames/<user>/`, differenced
/// within that user's regions.
pub struct VisionAgent {
    frames_dir: PathBuf,
    regions: BTreeMap<String, Vec<Region>>,
    params: MotionParams,
    cursor: BTreeMap<String, usize>,
    cadence: Duration,
}

impl VisionAgent {
    /// `regions.json` maps user id to that user's region list.
    pub fn load(sim_dir: &Path) -> Result<Self, SimError> {
        Ok(VisionAgent {
            frames_dir: sim_dir.join("frames"),
            regions: read_json(&sim_dir.join("regions.json"))?,
            params: MotionParams::default(),
            cursor: BTreeMap::new(),
            cadence: VISION_CADENCE,
        })
    }

    pub fn with_params(mut self, params: MotionParams) -> Self {
        self.params = params;
        self
    }

    fn frame_files(&self, user: &str) -> Vec<PathBuf> {
        let Ok(entries) = std::fs::read_dir(self.frames_dir.join(user)) else {
            return Vec::new();
        };
        let mut files: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
            .collect();
        files.sort();
        files
    }
}

impl Aggregator for VisionAgent {
    fn kind(&self) -> AggregatorKind {
        AggregatorKind::OfficeVision
    }

    fn cadence(&self) -> Duration {
        self.cadence
    }

    fn collect(&mut self, now: Timestamp, allowed: &BTreeSet<String>) -> Vec<Evidence> {
        let mut out = Vec::new();
        for (user, regions) in &self.regions {
            if !allowed.contains(user) {
                continue;
            }
            let files = self.frame_files(user);
            let i = *self.cursor.get(user).unwrap_or(&0);
            if i + 1 >= files.len() {
                continue;
            }
            self.cursor.insert(user.clone(), i + 1);
            let result = Frame::load(&files[i])
                .and_then(|prev| Ok((prev, Frame::load(&files[i + 1])?)))
                .and_then(|(prev, cur)| motion_detect(&prev, &cur, regions, &self.params));
            match result {
                Ok(payload) => out.push(Evidence::new(
                    user.as_str(),
                    "vision-sim",
                    now,
                    Payload::OfficeMotion(payload),
                )),
                Err(e) => warn!(%user, error = %e, "frame pair skipped"),
            }
        }
        out
    }
}

/// Bluetooth scanner replaying `sightings.json`, a list of device sighting
/// evidence. Each tick reports the best sighting visible as of `now`.
pub struct DeviceAgent {
    sightings: Vec<Evidence>,
    ttl: Duration,
    cadence: Duration,
}

impl DeviceAgent {
    pub fn load(sim_dir: &Path, ttl: Duration) -> Result<Self, SimError> {
        let sightings: Vec<Evidence> = read_json(&sim_dir.join("sightings.json"))?;
        if let Some(ev) = sightings.iter().find(|e| e.kind != AggregatorKind::DevicePresence) {
            return Err(SimError::Invalid(format!(
                "sightings.json holds {} evidence for {}",
                ev.kind, ev.user_id
            )));
        }
        Ok(DeviceAgent { sightings, ttl, cadence: DEVICE_CADENCE })
    }
}

impl Aggregator for DeviceAgent {
    fn kind(&self) -> AggregatorKind {
        AggregatorKind::DevicePresence
    }

    fn cadence(&self) -> Duration {
        self.cadence
    }

    fn collect(&mut self, now: Timestamp, allowed: &BTreeSet<String>) -> Vec<Evidence> {
        allowed
            .iter()
            .filter_map(|user| {
                let seen: Vec<Evidence> = self
                    .sightings
                    .iter()
                    .filter(|e| &e.user_id == user && e.observed_at <= now)
                    .cloned()
                    .collect();
                reduce_sightings(&seen, now, self.ttl).cloned()
            })
            .collect()
    }
}

/// What a desktop client would report about its machine.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct HostSample {
    pub user_id: String,
    pub host_id: String,
    pub address: String,
    /// Time since the last keyboard or mouse input.
    pub idle_ms: u64,
}

/// Adapter seam for where host samples come from.
pub trait HostSource: Send {
    fn sample(&mut self, user: &str, now: Timestamp) -> Option<HostSample>;
}

/// Fixed samples from `computers.json`.
pub struct FileHosts(Vec<HostSample>);

impl FileHosts {
    pub fn load(sim_dir: &Path) -> Result<Self, SimError> {
        read_json(&sim_dir.join("computers.json")).map(FileHosts)
    }

    pub fn new(samples: Vec<HostSample>) -> Self {
        FileHosts(samples)
    }
}

impl HostSource for FileHosts {
    fn sample(&mut self, user: &str, _now: Timestamp) -> Option<HostSample> {
        self.0.iter().find(|h| h.user_id == user).cloned()
    }
}

pub struct ComputerAgent<H> {
    hosts: H,
    network: NetworkConfig,
    cadence: Duration,
}

impl<H: HostSource> ComputerAgent<H> {
    pub fn new(hosts: H, network: NetworkConfig) -> Self {
        ComputerAgent { hosts, network, cadence: COMPUTER_CADENCE }
    }
}

impl<H: HostSource> Aggregator for ComputerAgent<H> {
    fn kind(&self) -> AggregatorKind {
        AggregatorKind::ComputerClient
    }

    fn cadence(&self) -> Duration {
        self.cadence
    }

    fn collect(&mut self, now: Timestamp, allowed: &BTreeSet<String>) -> Vec<Evidence> {
        allowed
            .iter()
            .filter_map(|user| {
                let host = self.hosts.sample(user, now)?;
                let last_input = now - Duration::from_millis(host.idle_ms);
                let payload = probe_computer(last_input, &host.address, &self.network, &host.host_id)?;
                Some(Evidence::new(user.as_str(), "computer-sim", now, Payload::ComputerActivity(payload)))
            })
            .collect()
    }
}

/// Calendar sync from `calendars/<user>.json`.
pub struct CalendarAgent {
    dir: PathBuf,
    cadence: Duration,
}

impl CalendarAgent {
    pub fn new(sim_dir: &Path) -> Self {
        CalendarAgent { dir: sim_dir.join("calendars"), cadence: CALENDAR_CADENCE }
    }
}

impl Aggregator for CalendarAgent {
    fn kind(&self) -> AggregatorKind {
        AggregatorKind::Calendar
    }

    fn cadence(&self) -> Duration {
        self.cadence
    }

    fn collect(&mut self, now: Timestamp, allowed: &BTreeSet<String>) -> Vec<Evidence> {
        allowed
            .iter()
            .filter_map(|user| {
                let path = self.dir.join(format!("{user}.json"));
                if !path.exists() {
                    return None;
                }
                match parse_calendar(&path) {
                    Ok(parsed) => Some(Evidence::new(
                        user.as_str(),
                        "calendar-sim",
                        now,
                        Payload::Calendar(parsed.payload),
                    )),
                    Err(e) => {
                        warn!(error = %e, "calendar skipped");
                        None
                    }
                }
            })
            .collect()
    }
}

/// IM presence from `im_sim/<user>/<protocol>.status`.
pub struct ImAgent {
    dir: PathBuf,
    cadence: Duration,
}

impl ImAgent {
    pub fn new(sim_dir: &Path) -> Self {
        ImAgent { dir: sim_dir.join("im_sim"), cadence: IM_CADENCE }
    }
}

impl Aggregator for ImAgent {
    fn kind(&self) -> AggregatorKind {
        AggregatorKind::ImPresence
    }

    fn cadence(&self) -> Duration {
        self.cadence
    }

    fn collect(&mut self, now: Timestamp, allowed: &BTreeSet<String>) -> Vec<Evidence> {
        allowed
            .iter()
            .flat_map(|user| {
                poll_im(&self.dir.join(user)).statuses.into_iter().map(move |s| {
                    Evidence::new(user.as_str(), "im-sim", now, Payload::ImStatus(s))
                })
            })
            .collect()
    }
}

macro_rules! cadence_setter {
    ($($t:ty),*) => {$(
        impl $t {
            pub fn with_cadence(mut self, cadence: Duration) -> Self {
                self.cadence = cadence;
                self
            }
        }
    )*};
}

cadence_setter!(VisionAgent, DeviceAgent, CalendarAgent, ImAgent);

impl<H> ComputerAgent<H> {
    pub fn with_cadence(mut self, cadence: Duration) -> Self {
        self.cadence = cadence;
        self
    }
}

/// All five agents over one simulation directory. Sources whose files are
/// missing are left out.
pub fn load_agents(
    sim_dir: &Path,
    network: NetworkConfig,
    sighting_ttl: Duration,
) -> Result<Vec<Box<dyn Aggregator>>, SimError> {
    let mut agents: Vec<Box<dyn Aggregator>> = Vec::new();
    if sim_dir.join("regions.json").exists() {
        agents.push(Box::new(VisionAgent::load(sim_dir)?));
    }
    if sim_dir.join("sightings.json").exists() {
        agents.push(Box::new(DeviceAgent::load(sim_dir, sighting_ttl)?));
    }
    if sim_dir.join("computers.json").exists() {
        agents.push(Box::new(ComputerAgent::new(FileHosts::load(sim_dir)?, network)));
    }
    agents.push(Box::new(CalendarAgent::new(sim_dir)));
    agents.push(Box::new(ImAgent::new(sim_dir)));
    Ok(agents)
}
