//! Cooperative wall-clock budget shared by the long-running searches.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// A deadline checked periodically from inside search loops.
///
/// Once any worker observes the deadline the budget latches as expired, so
/// the remaining workers bail out on their next check without reading the
/// clock.
#[derive(Debug)]
pub struct Budget {
    start: Instant,
    limit: Option<Duration>,
    expired: AtomicBool,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            start: Instant::now(),
            limit: None,
            expired: AtomicBool::new(false),
        }
    }

    pub fn with_limit(limit: Duration) -> Self {
        Budget {
            start: Instant::now(),
            limit: Some(limit),
            expired: AtomicBool::new(false),
        }
    }

    pub fn from_seconds(seconds: Option<f64>) -> Self {
        match seconds {
            Some(s) => Self::with_limit(Duration::from_secs_f64(s)),
            None => Self::unlimited(),
        }
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    pub fn check(&self) -> Result<()> {
        let Some(limit) = self.limit else {
            return Ok(());
        };
        if self.expired.load(Ordering::Relaxed) || self.start.elapsed() > limit {
            self.expired.store(true, Ordering::Relaxed);
            return Err(Error::Timeout {
                seconds: limit.as_secs_f64(),
            });
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::unlimited()
    }
}

/// Calls `Budget::check` once every `PERIOD` ticks.
pub(crate) struct Ticker<'a> {
    budget: &'a Budget,
    count: u32,
}

impl<'a> Ticker<'a> {
    const PERIOD: u32 = 1 << 14;

    pub(crate) fn new(budget: &'a Budget) -> Self {
        Ticker { budget, count: 0 }
    }

    #[inline]
    pub(crate) fn tick(&mut self) -> Result<()> {
        self.count += 1;
        if self.count >= Self::PERIOD {
            self.count = 0;
            self.budget.check()?;
        }
        Ok(())
    }
}
