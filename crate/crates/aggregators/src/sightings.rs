//! Picking the sighting that best describes where a device is now.

use std::cmp::Reverse;
use std::time::Duration;

use presence_core::{Evidence, Payload, Timestamp};

/// Latest fresh sighting; among equally recent ones the smallest `ap_id`
/// wins so the result does not depend on scan order.
pub fn reduce_sightings(sightings: &[Evidence], now: Timestamp, ttl: Duration) -> Option<&Evidence> {
    sightings
        .iter()
        .filter_map(|ev| match &ev.payload {
            Payload::DeviceSighting(s) => Some((ev, s)),
            _ => None,
        })
        .filter(|(ev, _)| now.millis_since(ev.observed_at) <= ttl.as_millis() as i64)
        .max_by_key(|(ev, s)| (ev.observed_at, Reverse(s.ap_id.as_str())))
        .map(|(ev, _)| ev)
}
