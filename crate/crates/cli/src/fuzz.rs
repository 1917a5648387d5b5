//! Fusion engine versus the rule-table oracle.

use std::fmt::Write as _;

use presence_core::{EvidenceStore, FreshnessPolicy, OptInConfig, PresenceState, Timestamp};
use presence_oracle::cases::{exhaustive, random_cases};
use presence_oracle::check::{check_cases, CheckSummary};

pub type FuseFn = fn(&EvidenceStore, &str, Timestamp, &FreshnessPolicy, &OptInConfig) -> PresenceState;

#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub seed: u64,
    pub exhaustive: CheckSummary,
    pub random: CheckSummary,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.exhaustive.passed() && self.random.passed()
    }

    /// Stable text: the same build, seed and case count give the same bytes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "exhaustive: {} cases, {} mismatches",
            self.exhaustive.checked, self.exhaustive.mismatches
        );
        let _ = writeln!(
            out,
            "random (seed {}): {} cases, {} mismatches",
            self.seed, self.random.checked, self.random.mismatches
        );
        if let Some(m) = self.exhaustive.first.as_ref().or(self.random.first.as_ref()) {
            let _ = writeln!(out, "first counterexample:\n{m}");
        }
        let _ = writeln!(out, "{}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// Runs the full exhaustive table, then `cases` random stores from `seed`.
pub fn run_fuzz(cases: usize, seed: u64, fuse: FuseFn) -> FuzzReport {
    FuzzReport {
        seed,
        exhaustive: check_cases(exhaustive(), fuse),
        random: check_cases(random_cases(seed, cases), fuse),
    }
}
