//! Merging per-protocol IM availability into one status.

use std::collections::BTreeMap;

use crate::model::{ImStatus, Protocol};

/// Online beats Away beats Offline; no protocols at all reads as Offline.
pub fn im_merge(latest_per_protocol: &BTreeMap<Protocol, ImStatus>) -> ImStatus {
    // ImStatus is declared Online < Away < Offline.
    latest_per_protocol
        .values()
        .copied()
        .min()
        .unwrap_or(ImStatus::Offline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn any_online_wins() {
        let m = BTreeMap::from([(Protocol::Skype, ImStatus::Online), (Protocol::Jabber, ImStatus::Offline)]);
        assert_eq!(im_merge(&m), ImStatus::Online);
    }

    #[test]
    fn away_only() {
        let m = BTreeMap::from([(Protocol::Jabber, ImStatus::Away)]);
        assert_eq!(im_merge(&m), ImStatus::Away);
    }

    #[test]
    fn empty_is_offline() {
        assert_eq!(im_merge(&BTreeMap::new()), ImStatus::Offline);
    }

    fn status() -> impl Strategy<Value = ImStatus> {
        prop_oneof![Just(ImStatus::Online), Just(ImStatus::Away), Just(ImStatus::Offline)]
    }

    fn protocol() -> impl Strategy<Value = Protocol> {
        prop::sample::select(Protocol::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn adding_online_yields_online(m in prop::collection::btree_map(protocol(), status(), 0..4), p in protocol()) {
            let mut m = m;
            m.insert(p, ImStatus::Online);
            prop_assert_eq!(im_merge(&m), ImStatus::Online);
        }

        #[test]
        fn matches_any_rule_regardless_of_insertion_order(entries in prop::collection::vec((protocol(), status()), 0..8)) {
            let forward: BTreeMap<_, _> = entries.iter().copied().collect();
            let mut reversed = BTreeMap::new();
            for &(p, _) in entries.iter().rev() {
                reversed.insert(p, forward[&p]);
            }
            let any = |s| forward.values().any(|&v| v == s);
            let expected = if any(ImStatus::Online) {
                ImStatus::Online
            } else if any(ImStatus::Away) {
                ImStatus::Away
            } else {
                ImStatus::Offline
            };
            prop_assert_eq!(im_merge(&forward), expected);
            prop_assert_eq!(im_merge(&reversed), expected);
        }
    }
}
