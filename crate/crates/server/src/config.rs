//! Deployment configuration file.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use presence_core::fusion::ZeroDuration;
use presence_core::{FreshnessPolicy, NetworkConfig, NetworkError, OptInConfig, UserProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PORT_ENV: &str = "PRESENCE_HUB_PORT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    #[default]
    System,
    /// Time only moves when a client sets it; used for deterministic replay.
    Virtual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentConfig {
    pub users: Vec<UserProfile>,
    /// Users without an entry start with every aggregator disabled.
    #[serde(default)]
    pub opt_ins: Vec<OptInConfig>,
    #[serde(default)]
    pub internal_cidrs: Vec<String>,
    #[serde(default)]
    pub vpn_cidrs: Vec<String>,
    #[serde(default)]
    pub freshness: FreshnessPolicy,
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    #[serde(default)]
    pub log_path: Option<PathBuf>,
    #[serde(default)]
    pub clock: ClockMode,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 7878))
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: at `{field}`: {message}")]
    Invalid {
        path: PathBuf,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("opt-in refers to unknown user `{0}`")]
    UnknownUser(String),
    #[error("user `{0}` is listed more than once")]
    DuplicateUser(String),
    #[error("user `{0}` has more than one opt-in entry")]
    DuplicateOptIn(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Freshness(#[from] ZeroDuration),
    #[error("invalid {PORT_ENV} `{0}`")]
    Port(String),
}

impl DeploymentConfig {
    /// Reads, parses and validates a config file, then applies the port
    /// override from the environment.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::parse(&text).map_err(|e| e.with_path(path))?;
        if let Ok(port) = std::env::var(PORT_ENV) {
            config.listen.set_port(port.parse().map_err(|_| ConfigError::Port(port))?);
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: DeploymentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            ConfigError::Invalid {
                path: PathBuf::new(),
                line: inner.line(),
                column: inner.column(),
                field: e.path().to_string(),
                message: inner.to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut known = BTreeSet::new();
        for user in &self.users {
            if !known.insert(user.user_id.as_str()) {
                return Err(ConfigError::DuplicateUser(user.user_id.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for optin in &self.opt_ins {
            if !known.contains(optin.user_id.as_str()) {
                return Err(ConfigError::UnknownUser(optin.user_id.clone()));
            }
            if !seen.insert(optin.user_id.as_str()) {
                return Err(ConfigError::DuplicateOptIn(optin.user_id.clone()));
            }
        }
        self.network()?;
        self.freshness.validate()?;
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkConfig, NetworkError> {
        let internal: Vec<&str> = self.internal_cidrs.iter().map(String::as_str).collect();
        let vpn: Vec<&str> = self.vpn_cidrs.iter().map(String::as_str).collect();
        NetworkConfig::parse(&internal, &vpn)
    }

    /// Every roster user's consent, defaulting to nothing enabled.
    pub fn initial_opt_ins(&self) -> Vec<OptInConfig> {
        self.users
            .iter()
            .map(|u| {
                self.opt_ins
                    .iter()
                    .find(|o| o.user_id == u.user_id)
                    .cloned()
                    .unwrap_or_else(|| OptInConfig::disabled(u.user_id.clone()))
            })
            .collect()
    }
}

impl ConfigError {
    fn with_path(self, file: &Path) -> Self {
        match self {
            ConfigError::Invalid { line, column, field, message, .. } => ConfigError::Invalid {
                path: file.to_owned(),
                line,
                column,
                field,
                message,
            },
            other => other,
        }
    }
}
