//! Library side of the `presence-hub` command.

pub mod fuzz;
pub mod metrics;
pub mod sim;

pub use fuzz::{run_fuzz, FuzzReport};
pub use metrics::{compute_metrics, MetricsReport, UserMetrics};
