//! Compare a fusion function against the rule table.

use std::fmt;

use presence_core::{EvidenceStore, FreshnessPolicy, OptInConfig, PresenceState, Timestamp};

use crate::cases::Case;
use crate::table::expected_state;

#[derive(Debug, Clone)]
pub struct Mismatch {
    pub case: Case,
    pub expected: PresenceState,
    pub actual: PresenceState,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let json = |s: &PresenceState| serde_json::to_string(s).unwrap_or_default();
        writeln!(f, "case:     {}", self.case.label)?;
        writeln!(f, "now:      {}", self.case.now)?;
        writeln!(f, "expected: {}", json(&self.expected))?;
        writeln!(f, "actual:   {}", json(&self.actual))?;
        write!(
            f,
            "evidence: {}",
            serde_json::to_string(&self.case.evidence()).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckSummary {
    pub checked: usize,
    pub mismatches: usize,
    pub first: Option<Mismatch>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Runs `fuse` on every case and counts disagreements with the table.
pub fn check_cases<I, F>(cases: I, fuse: F) -> CheckSummary
where
    I: IntoIterator<Item = Case>,
    F: Fn(&EvidenceStore, &str, Timestamp, &FreshnessPolicy, &OptInConfig) -> PresenceState,
{
    let mut summary = CheckSummary::default();
    for case in cases {
        summary.checked += 1;
        let expected = expected_state(&case.store, &case.user_id, case.now, &case.policy, &case.optin);
        let actual = fuse(&case.store, &case.user_id, case.now, &case.policy, &case.optin);
        if expected != actual {
            summary.mismatches += 1;
            if summary.first.is_none() {
                summary.first = Some(Mismatch { case, expected, actual });
            }
        }
    }
    summary
}
