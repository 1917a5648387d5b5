//! Scenario replay (and optional file-backed aggregators) against a hub.

use std::net::SocketAddr;
use std::path::Path;

use presence_aggregators::agents::{load_agents, TickReport};
use presence_aggregators::replay::{replay_scenario, ReplayError, ReplayOptions, ReplayReport};
use presence_aggregators::{run_agent, HttpTransport, ScenarioScript};
use presence_core::Timestamp;
use presence_server::{ClockMode, DeploymentConfig};

/// URL for reaching a hub that listens on `addr`.
pub fn local_url(addr: SocketAddr) -> String {
    let host = if addr.ip().is_unspecified() { "127.0.0.1".to_owned() } else { addr.ip().to_string() };
    format!("http://{host}:{}", addr.port())
}

pub async fn replay_file(
    config: &DeploymentConfig,
    scenario: &Path,
    speed: f64,
    server: &str,
) -> anyhow::Result<Result<ReplayReport, ReplayError>> {
    let script = ScenarioScript::load(scenario)?;
    let transport = HttpTransport::new(server);
    let options = ReplayOptions { speed, drive_clock: config.clock == ClockMode::Virtual };
    Ok(replay_scenario(&script, &transport, options).await)
}

/// Runs every aggregator found under `sim_dir` for `ticks` polls each,
/// concurrently, reading time from the wall clock.
pub async fn run_agents(
    config: &DeploymentConfig,
    sim_dir: &Path,
    ticks: usize,
    server: &str,
) -> anyhow::Result<TickReport> {
    let agents = load_agents(sim_dir, config.network()?, config.freshness.sighting_ttl)?;
    let transport = HttpTransport::new(server);
    let runs = agents.into_iter().map(|mut agent| {
        let transport = transport.clone();
        tokio::spawn(async move { run_agent(agent.as_mut(), &transport, ticks, Timestamp::now).await })
    });
    let mut total = TickReport::default();
    for handle in runs.collect::<Vec<_>>() {
        let r = handle.await?;
        total.posted += r.posted;
        total.rejected += r.rejected;
    }
    Ok(total)
}
