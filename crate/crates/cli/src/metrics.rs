//! Offline metrics over the hub's event log: how long status messages stayed
//! up and how often and how long dashboards were open.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use presence_core::{LogEvent, LogEventKind, Timestamp};
use serde::Serialize;

const MS_PER_HOUR: f64 = 3_600_000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageVisibility {
    pub posted_at: Timestamp,
    pub blank: bool,
    pub hours: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct UserMetrics {
    pub user_id: String,
    pub messages: usize,
    pub non_blank: usize,
    pub blank: usize,
    /// Over non-blank messages.
    pub mean_visibility_hours: f64,
    /// Sample standard deviation over non-blank messages; 0 below two.
    pub sd_visibility_hours: f64,
    pub visibility: Vec<MessageVisibility>,
    pub dashboard_opens: usize,
    pub dashboard_open_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricsReport {
    pub until: Timestamp,
    pub users: Vec<UserMetrics>,
    pub warnings: Vec<String>,
}

fn hours(from: Timestamp, to: Timestamp) -> f64 {
    to.millis_since(from).max(0) as f64 / MS_PER_HOUR
}

fn is_blank_post(e: &LogEvent) -> bool {
    e.detail.get("text").and_then(|t| t.as_str()).is_none_or(|t| t.trim().is_empty())
}

/// Entries after `until` are ignored. Without `until`, the report runs to the
/// latest entry in the log.
pub fn compute_metrics(events: &[LogEvent], until: Option<Timestamp>) -> MetricsReport {
    let until = until
        .or_else(|| events.iter().map(|e| e.at).max())
        .unwrap_or(Timestamp::EPOCH);
    let mut per_user: BTreeMap<&str, Vec<&LogEvent>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.at <= until) {
        per_user.entry(&e.user_id).or_default().push(e);
    }
    let mut report = MetricsReport { until, ..Default::default() };
    for (user, mut evs) in per_user {
        // Stable: equal timestamps keep log order.
        evs.sort_by_key(|e| e.at);
        let mut m = UserMetrics { user_id: user.to_owned(), ..Default::default() };

        let posts: Vec<&LogEvent> = evs.iter().copied().filter(|e| e.kind == LogEventKind::StatusPost).collect();
        for (i, post) in posts.iter().enumerate() {
            let end = posts.get(i + 1).map_or(until, |next| next.at);
            m.visibility.push(MessageVisibility {
                posted_at: post.at,
                blank: is_blank_post(post),
                hours: hours(post.at, end),
            });
        }
        m.messages = posts.len();
        m.blank = m.visibility.iter().filter(|v| v.blank).count();
        m.non_blank = m.messages - m.blank;
        let shown: Vec<f64> = m.visibility.iter().filter(|v| !v.blank).map(|v| v.hours).collect();
        (m.mean_visibility_hours, m.sd_visibility_hours) = mean_sd(&shown);

        let mut open: Option<Timestamp> = None;
        for e in &evs {
            match e.kind {
                LogEventKind::DashboardOpen => {
                    if let Some(start) = open.replace(e.at) {
                        m.dashboard_open_hours += hours(start, e.at);
                    }
                    m.dashboard_opens += 1;
                }
                LogEventKind::DashboardClose => match open.take() {
                    Some(start) => m.dashboard_open_hours += hours(start, e.at),
                    None => report.warnings.push(format!("{user}: close at {} without an open", e.at)),
                },
                _ => {}
            }
        }
        if let Some(start) = open {
            m.dashboard_open_hours += hours(start, until);
        }
        report.users.push(m);
    }
    report
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl MetricsReport {
    /// Fixed columns, two decimals, one row per user plus a total row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>9} {:>6} {:>10} {:>10} {:>6} {:>10}",
            "user", "messages", "non_blank", "blank", "mean_vis_h", "sd_vis_h", "opens", "open_h"
        );
        let row = |out: &mut String, name: &str, m: &UserMetrics| {
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>9} {:>6} {:>10.2} {:>10.2} {:>6} {:>10.2}",
                name,
                m.messages,
                m.non_blank,
                m.blank,
                m.mean_visibility_hours,
                m.sd_visibility_hours,
                m.dashboard_opens,
                m.dashboard_open_hours
            );
        };
        for m in &self.users {
            row(&mut out, &m.user_id, m);
        }
        row(&mut out, "TOTAL", &self.totals());
        out
    }

    /// Pooled over every user's messages and sessions.
    pub fn totals(&self) -> UserMetrics {
        let shown: Vec<f64> = self
            .users
            .iter()
            .flat_map(|u| u.visibility.iter().filter(|v| !v.blank).map(|v| v.hours))
            .collect();
        let (mean, sd) = mean_sd(&shown);
        UserMetrics {
            user_id: "TOTAL".into(),
            messages: self.users.iter().map(|u| u.messages).sum(),
            non_blank: self.users.iter().map(|u| u.non_blank).sum(),
            blank: self.users.iter().map(|u| u.blank).sum(),
            mean_visibility_hours: mean,
            sd_visibility_hours: sd,
            visibility: Vec::new(),
            dashboard_opens: self.users.iter().map(|u| u.dashboard_opens).sum(),
            dashboard_open_hours: self.users.iter().fold(0.0, |acc, u| acc + u.dashboard_open_hours),
        }
    }
}
