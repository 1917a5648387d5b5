//! Desktop client probe: recent input plus where the machine is connected from.

use presence_core::{ComputerActivityPayload, NetworkConfig, Timestamp};

/// Off-network or unparseable addresses produce no report at all.
pub fn probe_computer(
    last_input_at: Timestamp,
    local_address: &str,
    network: &NetworkConfig,
    host_id: &str,
) -> Option<ComputerActivityPayload> {
    let class = network.classify(local_address).ok()?.as_class()?;
    Some(ComputerActivityPayload {
        last_input_at,
        network_class: class,
        host_id: host_id.to_owned(),
    })
}
