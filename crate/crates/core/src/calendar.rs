//! What a calendar says about the present instant.

use crate::model::{CalendarEvent, CalendarEventKind};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CalendarNow {
    pub current_meeting: bool,
    pub out_of_office: bool,
}

/// Intervals are half-open: an event covers `start <= now < end`.
pub fn calendar_now(events: &[CalendarEvent], now: Timestamp) -> CalendarNow {
    events
        .iter()
        .filter(|e| e.contains(now))
        .fold(CalendarNow::default(), |acc, e| CalendarNow {
            current_meeting: acc.current_meeting
                || matches!(e.kind, CalendarEventKind::Meeting | CalendarEventKind::Other),
            out_of_office: acc.out_of_office || e.kind.is_out_of_office(),
        })
}
