use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive, 0-based frame range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Interval {
    start: usize,
    end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::invalid(format!(
                "interval [{start}, {end}] ends before it starts"
            )));
        }
        Ok(Interval { start, end })
    }

    pub fn frame(idx: usize) -> Self {
        Interval {
            start: idx,
            end: idx,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of frames covered.
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, frame: usize) -> bool {
        self.start <= frame && frame <= self.end
    }

    /// Frames shared with `other`.
    pub fn overlap(&self, other: &Interval) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if lo > hi {
            0
        } else {
            hi - lo + 1
        }
    }

    pub fn midpoint(&self) -> usize {
        self.start + (self.end - self.start) / 2
    }

    pub fn fits(&self, length: usize) -> bool {
        self.end < length
    }
}

impl TryFrom<[usize; 2]> for Interval {
    type Error = Error;

    fn try_from([s, e]: [usize; 2]) -> Result<Self> {
        Interval::new(s, e)
    }
}

impl From<Interval> for [usize; 2] {
    fn from(i: Interval) -> Self {
        [i.start, i.end]
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}
