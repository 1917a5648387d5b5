//! Evidence producers for the five aggregator kinds.
//!
//! Each aggregator asks the server which users have enabled its kind and
//! only collects and transmits evidence for those users. Hardware is
//! replaced by file-backed sources (PGM frames, JSON sighting and host
//! lists, JSON calendars, IM status files) so runs are reproducible; the
//! detection and classification logic on top of them is the real thing.

pub mod agents;
pub mod calendar;
pub mod computer;
pub mod im;
pub mod motion;
pub mod replay;
pub mod scenario;
pub mod sightings;
pub mod transport;

pub use calendar::{parse_calendar, CalendarFileError, CalendarParse};
pub use computer::probe_computer;
pub use im::{poll_im, ImPoll};
pub use motion::{motion_detect, Frame, MotionError, MotionParams, Region, RegionRole};
pub use replay::{replay_scenario, virtual_schedule, ReplayError, ReplayOptions, ReplayReport};
pub use scenario::{ScenarioError, ScenarioScript, ScriptEvent};
pub use sightings::reduce_sightings;
pub use transport::{HttpTransport, PostOutcome, Transport, TransportError};
pub use agents::{run_agent, run_tick, Aggregator, TickReport};
