use parking_lot::Mutex;
use presence_core::Timestamp;
use thiserror::Error;

use crate::config::ClockMode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("the hub runs on the system clock")]
    NotVirtual,
    #[error("virtual clock cannot move back from {current} to {requested}")]
    Backwards { current: Timestamp, requested: Timestamp },
}

/// The hub's single time source. Readings never go backwards, even if the
/// system clock does.
#[derive(Debug)]
pub struct Clock {
    mode: ClockMode,
    last: Mutex<Timestamp>,
}

impl Clock {
    pub fn system() -> Self {
        Clock { mode: ClockMode::System, last: Mutex::new(Timestamp::EPOCH) }
    }

    pub fn virtual_at(start: Timestamp) -> Self {
        Clock { mode: ClockMode::Virtual, last: Mutex::new(start) }
    }

    pub fn new(mode: ClockMode) -> Self {
        match mode {
            ClockMode::System => Clock::system(),
            ClockMode::Virtual => Clock::virtual_at(Timestamp::EPOCH),
        }
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn now(&self) -> Timestamp {
        let mut last = self.last.lock();
        if self.mode == ClockMode::System {
            *last = (*last).max(Timestamp::now());
        }
        *last
    }

    pub fn set(&self, to: Timestamp) -> Result<(), ClockError> {
        if self.mode != ClockMode::Virtual {
            return Err(ClockError::NotVirtual);
        }
        let mut last = self.last.lock();
        if to < *last {
            return Err(ClockError::Backwards { current: *last, requested: to });
        }
        *last = to;
        Ok(())
    }
}
