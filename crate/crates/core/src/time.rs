//! Virtual-clock time primitives.
//!
//! All timestamps are stored as integer milliseconds so that virtual-clock
//! arithmetic is exact and session replays are bit-reproducible. Wire formats
//! that carry seconds (`timestamp_s`, `start_s`, ...) convert at the
//! serialization boundary; prompt text renders seconds with one decimal.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Sub};

/// An instant on the stream clock, in milliseconds since stream start.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TimeMs(pub u64);

/// A span of time in milliseconds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DurationMs(pub u64);

impl TimeMs {
    pub const ZERO: TimeMs = TimeMs(0);

    /// Convert from seconds, rounding to the nearest millisecond.
    /// Negative inputs clamp to zero.
    pub fn from_secs_f64(secs: f64) -> TimeMs {
        TimeMs((secs.max(0.0) * 1000.0).round() as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Seconds with one decimal, e.g. `12.5`. The fixed prompt-side rendering.
    pub fn render_secs(self) -> String {
        format!("{:.1}", self.as_secs_f64())
    }

    pub fn saturating_sub(self, other: TimeMs) -> DurationMs {
        DurationMs(self.0.saturating_sub(other.0))
    }
}

impl DurationMs {
    pub const ZERO: DurationMs = DurationMs(0);

    pub fn from_secs_f64(secs: f64) -> DurationMs {
        DurationMs((secs.max(0.0) * 1000.0).round() as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl Add<DurationMs> for TimeMs {
    type Output = TimeMs;
    fn add(self, rhs: DurationMs) -> TimeMs {
        TimeMs(self.0 + rhs.0)
    }
}

impl Sub<TimeMs> for TimeMs {
    type Output = DurationMs;
    fn sub(self, rhs: TimeMs) -> DurationMs {
        DurationMs(self.0.checked_sub(rhs.0).expect("time went backwards"))
    }
}

impl Add for DurationMs {
    type Output = DurationMs;
    fn add(self, rhs: DurationMs) -> DurationMs {
        DurationMs(self.0 + rhs.0)
    }
}

impl fmt::Display for TimeMs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.render_secs())
    }
}

/// Serde adapter: a [`TimeMs`] field carried as fractional seconds on the wire.
pub mod serde_secs {
    use super::TimeMs;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &TimeMs, ser: S) -> Result<S::Ok, S::Error> {
        t.as_secs_f64().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<TimeMs, D::Error> {
        let secs = f64::deserialize(de)?;
        if !secs.is_finite() || secs < 0.0 {
            return Err(serde::de::Error::custom(format!(
                "timestamp must be a non-negative finite number of seconds, got {secs}"
            )));
        }
        Ok(TimeMs::from_secs_f64(secs))
    }
}
