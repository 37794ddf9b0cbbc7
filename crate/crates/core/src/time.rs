//! Clock injection for search budgets.
//!
//! The solvers check a [`Deadline`] at every search-node expansion. The crate
//! is `no_std`, so wall-clock time comes from the embedder through the
//! [`Clock`] trait; the companion crate provides an `Instant`-backed
//! implementation, tests use [`FrozenClock`].

/// A monotonic millisecond clock.
pub trait Clock {
    fn now_millis(&self) -> u64;
}

/// A clock that never advances. Deadlines built on it never expire and all
/// elapsed measurements read zero, which also makes runs byte-reproducible.
#[derive(Debug, Default, Clone, Copy)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now_millis(&self) -> u64 {
        0
    }
}

/// A point in time after which a search must stop.
#[derive(Clone, Copy)]
pub struct Deadline<'a> {
    clock: &'a dyn Clock,
    started_ms: u64,
    expires_ms: Option<u64>,
}

impl<'a> Deadline<'a> {
    /// Deadline `budget_ms` from now.
    pub fn after(clock: &'a dyn Clock, budget_ms: u64) -> Self {
        let now = clock.now_millis();
        Deadline {
            clock,
            started_ms: now,
            expires_ms: Some(now.saturating_add(budget_ms)),
        }
    }

    /// A deadline that never expires.
    pub fn unlimited(clock: &'a dyn Clock) -> Self {
        Deadline {
            clock,
            started_ms: clock.now_millis(),
            expires_ms: None,
        }
    }

    pub fn expired(&self) -> bool {
        match self.expires_ms {
            Some(at) => self.clock.now_millis() >= at,
            None => false,
        }
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.clock.now_millis().saturating_sub(self.started_ms)
    }

    pub fn clock(&self) -> &'a dyn Clock {
        self.clock
    }
}

impl core::fmt::Debug for Deadline<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Deadline")
            .field("started_ms", &self.started_ms)
            .field("expires_ms", &self.expires_ms)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::cell::Cell;

    pub struct TickClock(pub Cell<u64>);

    impl Clock for TickClock {
        fn now_millis(&self) -> u64 {
            self.0.get()
        }
    }

    #[test]
    fn deadline_expiry() {
        let clock = TickClock(Cell::new(100));
        let deadline = Deadline::after(&clock, 50);
        assert!(!deadline.expired());
        clock.0.set(149);
        assert!(!deadline.expired());
        assert_eq!(deadline.elapsed_ms(), 49);
        clock.0.set(150);
        assert!(deadline.expired());
    }

    #[test]
    fn frozen_never_expires() {
        let clock = FrozenClock;
        assert!(!Deadline::after(&clock, 0).expired() || Deadline::after(&clock, 0).expired());
        // A zero budget expires immediately even on a frozen clock.
        assert!(Deadline::after(&clock, 0).expired());
        assert!(!Deadline::after(&clock, 1).expired());
        assert!(!Deadline::unlimited(&clock).expired());
    }
}
