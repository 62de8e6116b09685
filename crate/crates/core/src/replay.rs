//! Sliding-window replay detection over 64-bit sequence numbers.

use std::fmt;

pub const WINDOW_SIZE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayVerdict {
    Accept,
    Duplicate,
    /// Too far behind the highest accepted sequence to be tracked.
    Stale,
}

impl fmt::Display for ReplayVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReplayVerdict::Accept => "accepted",
            ReplayVerdict::Duplicate => "duplicate",
            ReplayVerdict::Stale => "stale",
        })
    }
}

/// Tracks the highest sequence seen plus a bitmap of the 64 sequences
/// ending at it. Bit `k` set means `highest_seen - k` was accepted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayWindow {
    highest_seen: u64,
    bitmap: u64,
}

impl ReplayWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(highest_seen: u64, bitmap: u64) -> Self {
        Self { highest_seen, bitmap }
    }

    pub fn highest_seen(&self) -> u64 {
        self.highest_seen
    }

    pub fn bitmap(&self) -> u64 {
        self.bitmap
    }

    /// Classifies `sequence` without changing the window.
    pub fn check(&self, sequence: u64) -> ReplayVerdict {
        // an empty bitmap means nothing has been accepted yet
        if self.bitmap == 0 || sequence > self.highest_seen {
            return ReplayVerdict::Accept;
        }
        let behind = self.highest_seen - sequence;
        if behind >= WINDOW_SIZE {
            ReplayVerdict::Stale
        } else if self.bitmap & (1 << behind) != 0 {
            ReplayVerdict::Duplicate
        } else {
            ReplayVerdict::Accept
        }
    }

    /// Records `sequence` as seen. Callers must have obtained
    /// [`ReplayVerdict::Accept`] from [`check`](Self::check) first.
    pub fn commit(&mut self, sequence: u64) {
        if self.bitmap == 0 {
            self.highest_seen = sequence;
            self.bitmap = 1;
        } else if sequence > self.highest_seen {
            let ahead = sequence - self.highest_seen;
            self.bitmap = if ahead >= WINDOW_SIZE { 0 } else { self.bitmap << ahead };
            self.bitmap |= 1;
            self.highest_seen = sequence;
        } else {
            self.bitmap |= 1 << (self.highest_seen - sequence);
        }
    }

    /// Check and, on acceptance, commit.
    pub fn check_replay(&mut self, sequence: u64) -> ReplayVerdict {
        let verdict = self.check(sequence);
        if verdict == ReplayVerdict::Accept {
            self.commit(sequence);
        }
        verdict
    }
}
