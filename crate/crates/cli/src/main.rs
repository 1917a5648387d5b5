use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use presence_core::Timestamp;
use presence_hub::sim::{local_url, replay_file, run_agents};
use presence_hub::{compute_metrics, run_fuzz};
use presence_server::{hub_from_config, read_log, serve, DeploymentConfig};
use tracing::{error, info};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "presence-hub", version, about = "Workplace presence hub and tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the hub until interrupted.
    Serve { config: PathBuf },
    /// Replay a scenario against a running hub.
    Sim {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Hub base URL; defaults to the config's listen address.
        #[arg(long)]
        server: Option<String>,
        /// Also run the file-backed aggregators over this directory.
        #[arg(long)]
        sim_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        ticks: usize,
    },
    /// Compare the fusion engine with the rule-table oracle.
    Fuzz {
        #[arg(long, default_value_t = 10_000)]
        cases: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Status-message visibility and dashboard usage from an event log.
    Metrics {
        log: PathBuf,
        /// End of the measurement window (RFC 3339); defaults to the last entry.
        #[arg(long)]
        until: Option<Timestamp>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Both,
}

enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn user(e: impl Into<anyhow::Error>) -> Failure {
    Failure::User(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

fn load_config(path: &Path) -> Result<DeploymentConfig, Failure> {
    DeploymentConfig::load(path).map_err(user)
}

async fn cmd_serve(path: &Path) -> Outcome {
    let config = load_config(path)?;
    let hub = hub_from_config(&config)
        .with_context(|| format!("cannot open event log {:?}", config.log_path))
        .map_err(user)?;
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .with_context(|| format!("cannot listen on {}", config.listen))
        .map_err(internal)?;
    println!("listening on {}", local_url(listener.local_addr().map_err(internal)?));
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
        info!("shutting down");
    };
    serve(listener, hub, shutdown).await.map_err(internal)
}

async fn cmd_sim(
    config: &Path,
    scenario: &Path,
    speed: f64,
    server: Option<String>,
    sim_dir: Option<PathBuf>,
    ticks: usize,
) -> Outcome {
    let config = load_config(config)?;
    let server = server.unwrap_or_else(|| local_url(config.listen));
    let outcome = replay_file(&config, scenario, speed, &server).await.map_err(user)?;
    let report = match outcome {
        Ok(report) => report,
        Err(presence_aggregators::ReplayError::Aborted { index, report, source }) => {
            println!("{}", serde_json::to_string(&report).map_err(internal)?);
            return Err(internal(anyhow::anyhow!("replay aborted at event {index}: {source}")));
        }
        Err(e) => return Err(user(e)),
    };
    println!("{}", serde_json::to_string(&report).map_err(internal)?);
    if let Some(dir) = sim_dir {
        let agents = run_agents(&config, &dir, ticks, &server).await.map_err(user)?;
        println!("{{\"agents_posted\":{},\"agents_rejected\":{}}}", agents.posted, agents.rejected);
    }
    Ok(())
}

fn cmd_fuzz(cases: usize, seed: u64) -> Outcome {
    let report = run_fuzz(cases, seed, presence_core::fuse);
    print!("{}", report.render());
    if report.passed() {
        Ok(())
    } else {
        Err(user(anyhow::anyhow!("fusion disagrees with the oracle")))
    }
}

fn cmd_metrics(log: &Path, until: Option<Timestamp>, format: Format) -> Outcome {
    let file = std::fs::File::open(log)
        .with_context(|| format!("cannot open log {}", log.display()))
        .map_err(user)?;
    let events = read_log(file).with_context(|| format!("in {}", log.display())).map_err(user)?;
    let report = compute_metrics(&events, until);
    for w in &report.warnings {
        tracing::warn!("{w}");
    }
    if matches!(format, Format::Json | Format::Both) {
        println!("{}", serde_json::to_string_pretty(&report).map_err(internal)?);
    }
    if matches!(format, Format::Text | Format::Both) {
        print!("{}", report.render_table());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            error!("cannot start runtime: {e}");
            return ExitCode::from(2);
        }
    };
    let result = runtime.block_on(async {
        match cli.command {
            Command::Serve { config } => cmd_serve(&config).await,
            Command::Sim { config, scenario, speed, server, sim_dir, ticks } => {
                cmd_sim(&config, &scenario, speed, server, sim_dir, ticks).await
            }
            Command::Fuzz { cases, seed } => cmd_fuzz(cases, seed),
            Command::Metrics { log, until, format } => cmd_metrics(&log, until, format),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
