//! Internal / VPN / off-network classification of client addresses.
//!
//! Overlapping lists resolve in favour of `Internal`.

use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NetworkClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkZone {
    Internal,
    Vpn,
    Neither,
}

impl NetworkZone {
    pub fn as_class(self) -> Option<NetworkClass> {
        match self {
            NetworkZone::Internal => Some(NetworkClass::Internal),
            NetworkZone::Vpn => Some(NetworkClass::Vpn),
            NetworkZone::Neither => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("malformed address `{0}`")]
    Address(String),
    #[error("malformed CIDR `{0}`")]
    Cidr(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default)]
    pub internal_cidrs: Vec<IpNet>,
    #[serde(default)]
    pub vpn_cidrs: Vec<IpNet>,
}

impl NetworkConfig {
    pub fn parse(internal: &[&str], vpn: &[&str]) -> Result<Self, NetworkError> {
        Ok(NetworkConfig {
            internal_cidrs: parse_cidrs(internal)?,
            vpn_cidrs: parse_cidrs(vpn)?,
        })
    }

    pub fn classify(&self, address: &str) -> Result<NetworkZone, NetworkError> {
        classify_network(address, &self.internal_cidrs, &self.vpn_cidrs)
    }
}

pub fn parse_cidrs(cidrs: &[&str]) -> Result<Vec<IpNet>, NetworkError> {
    cidrs
        .iter()
        .map(|c| c.parse::<IpNet>().map_err(|_| NetworkError::Cidr((*c).to_owned())))
        .collect()
}

pub fn classify_network(
    address: &str,
    internal_cidrs: &[IpNet],
    vpn_cidrs: &[IpNet],
) -> Result<NetworkZone, NetworkError> {
    let ip: IpAddr = address
        .trim()
        .parse()
        .map_err(|_| NetworkError::Address(address.to_owned()))?;
    if internal_cidrs.iter().any(|net| net.contains(&ip)) {
        Ok(NetworkZone::Internal)
    } else if vpn_cidrs.iter().any(|net| net.contains(&ip)) {
        Ok(NetworkZone::Vpn)
    } else {
        Ok(NetworkZone::Neither)
    }
}
