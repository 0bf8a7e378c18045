//! Fixed-point quantities.
//!
//! Every time, work, frequency, data volume and transfer rate is stored as an
//! integer number of millionths. Config values are decimals, so scaling by a
//! fixed denominator keeps zone arithmetic and trace comparison exact.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Ticks per unit for every fixed-point quantity.
pub const SCALE: i64 = 1_000_000;

macro_rules! fixed_quantity {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(i64);

        impl $name {
            pub const ZERO: Self = Self(0);

            pub const fn from_ticks(ticks: i64) -> Self {
                Self(ticks)
            }

            pub const fn ticks(self) -> i64 {
                self.0
            }

            pub const fn from_units(units: i64) -> Self {
                Self(units * SCALE)
            }

            /// Rounds to the nearest tick.
            pub fn from_f64(value: f64) -> Self {
                Self((value * SCALE as f64).round() as i64)
            }

            pub fn as_f64(self) -> f64 {
                self.0 as f64 / SCALE as f64
            }

            pub fn is_negative(self) -> bool {
                self.0 < 0
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self(self.0 + rhs.0)
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self(self.0 - rhs.0)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: Self) {
                self.0 += rhs.0;
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_ticks(f, self.0)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(self.as_f64())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let v = f64::deserialize(d)?;
                if !v.is_finite() || v.abs() > 1.0e9 {
                    return Err(serde::de::Error::custom(format!("{v} is out of range")));
                }
                Ok(Self::from_f64(v))
            }
        }
    };
}

fixed_quantity!(
    /// A point in time or a duration, in abstract time units.
    Time
);
fixed_quantity!(
    /// Amount of computation, in cycles.
    Work
);
fixed_quantity!(
    /// Processor speed, in cycles per time unit.
    Freq
);
fixed_quantity!(
    /// Amount of data, in bytes.
    Volume
);
fixed_quantity!(
    /// Transfer rate, in bytes per time unit.
    Rate
);

impl Time {
    /// Sentinel for "unbounded above". Only produced by interval upper bounds.
    pub const INFINITY: Time = Time(i64::MAX);

    pub fn is_infinite(self) -> bool {
        self.0 == i64::MAX
    }
}

/// `numerator / denominator` for two quantities of the same scale, rounded
/// half-up to ticks. Both arguments must be non-negative, the denominator positive.
pub(crate) fn div_ticks(numerator: i64, denominator: i64) -> i64 {
    debug_assert!(numerator >= 0 && denominator > 0);
    let n = numerator as i128 * SCALE as i128;
    let d = denominator as i128;
    ((2 * n + d) / (2 * d)) as i64
}

impl Work {
    /// Time needed to perform this work at frequency `f`.
    pub fn at(self, f: Freq) -> Time {
        Time::from_ticks(div_ticks(self.0, f.0))
    }
}

impl Volume {
    /// Time needed to move this volume at `rate`.
    pub fn over(self, rate: Rate) -> Time {
        Time::from_ticks(div_ticks(self.0, rate.0))
    }
}

fn write_ticks(f: &mut fmt::Formatter<'_>, ticks: i64) -> fmt::Result {
    if ticks == i64::MAX {
        return f.write_str("inf");
    }
    let sign = if ticks < 0 { "-" } else { "" };
    let abs = ticks.unsigned_abs();
    let scale = SCALE as u64;
    write!(f, "{sign}{}.{:06}", abs / scale, abs % scale)
}

/// Serde adapter for [`Time`] values that may be [`Time::INFINITY`]; the
/// infinite value is written as `null`.
pub mod time_or_inf {
    use super::Time;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &Time, s: S) -> Result<S::Ok, S::Error> {
        if t.is_infinite() {
            s.serialize_none()
        } else {
            t.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Time, D::Error> {
        Ok(Option::<Time>::deserialize(d)?.unwrap_or(Time::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_has_six_decimals() {
        assert_eq!(Time::from_f64(5.0).to_string(), "5.000000");
        assert_eq!(Time::from_ticks(-1_500_000).to_string(), "-1.500000");
        assert_eq!(Time::from_ticks(7).to_string(), "0.000007");
        assert_eq!(Time::INFINITY.to_string(), "inf");
    }

    #[test]
    fn decimals_scale_exactly() {
        assert_eq!(Time::from_f64(0.1).ticks(), 100_000);
        assert_eq!(Time::from_f64(8400.0).ticks(), 8_400_000_000);
        let t: Time = serde_json::from_str("2.000001").unwrap();
        assert_eq!(t.ticks(), 2_000_001);
        assert_eq!(serde_json::to_string(&t).unwrap(), "2.000001");
    }

    #[test]
    fn work_over_frequency_rounds_half_up() {
        assert_eq!(Work::from_units(100).at(Freq::from_units(2)), Time::from_units(50));
        // 1/3 time unit
        assert_eq!(Work::from_units(1).at(Freq::from_units(3)).ticks(), 333_333);
        assert_eq!(Work::from_units(2).at(Freq::from_units(3)).ticks(), 666_667);
        assert_eq!(Volume::from_units(1000).over(Rate::from_units(100)), Time::from_units(10));
    }
}
