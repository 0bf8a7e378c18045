//! Arrival processes for job instances.
//!
//! Periodic, jitter and uncertain generators have a per-arrival window and a
//! uniform sampling semantics. The two variability-bounded kinds are window
//! constraints over the whole arrival sequence; they are analyzed formally,
//! and simulated only from an explicit arrival list.

use serde::{Deserialize, Serialize};

use crate::model::TimeInterval;
use crate::rng::{uniform_ticks, Stream};
use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeneratorError {
    #[error("{0} generators constrain arrival sets, not individual arrivals")]
    UnsupportedWindow(&'static str),
    #[error("{0} generators have no sampling semantics; give an explicit arrival list")]
    NoProbabilisticSemantics(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `t_k = (k-1) d`.
    Periodic { period: Time },
    /// `t_k ∈ [(k-1) d, (k-1) d + J]`; deviations do not accumulate.
    Jitter { period: Time, jitter: Time },
    /// `t_k ∈ [t_{k-1} + d, t_{k-1} + d + J]`; deviations accumulate.
    Uncertain { period: Time, jitter: Time },
    /// At most `max` arrivals in any closed window of length `window`.
    BoundedVariability { window: Time, max: u32 },
    /// Between `min` and `max` arrivals in every closed window of length
    /// `window` that ends no later than the last arrival.
    BiboundedVariability { window: Time, min: u32, max: u32 },
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Periodic { .. } => "periodic",
            GeneratorKind::Jitter { .. } => "jitter",
            GeneratorKind::Uncertain { .. } => "uncertain",
            GeneratorKind::BoundedVariability { .. } => "bounded_variability",
            GeneratorKind::BiboundedVariability { .. } => "bibounded_variability",
        }
    }

    pub fn period(&self) -> Option<Time> {
        match self {
            GeneratorKind::Periodic { period }
            | GeneratorKind::Jitter { period, .. }
            | GeneratorKind::Uncertain { period, .. } => Some(*period),
            _ => None,
        }
    }

    pub fn jitter(&self) -> Time {
        match self {
            GeneratorKind::Jitter { jitter, .. } | GeneratorKind::Uncertain { jitter, .. } => *jitter,
            _ => Time::ZERO,
        }
    }
}

/// Emits `count` instances of `job_type`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Generator {
    pub job_type: String,
    pub count: u32,
    #[serde(flatten)]
    pub kind: GeneratorKind,
    /// Fixed arrival times used by the simulator instead of sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<Vec<Time>>,
}

impl Generator {
    pub fn new(job_type: impl Into<String>, count: u32, kind: GeneratorKind) -> Self {
        Self { job_type: job_type.into(), count, kind, arrivals: None }
    }

    /// Parameter sanity; the message is meant for users.
    pub fn check_parameters(&self) -> Result<(), String> {
        if self.count == 0 {
            return Err("instance count must be positive".into());
        }
        match &self.kind {
            GeneratorKind::Periodic { period } => positive(*period, "period")?,
            GeneratorKind::Jitter { period, jitter } => {
                positive(*period, "period")?;
                non_negative(*jitter, "jitter")?;
                if jitter >= period {
                    return Err("jitter must be smaller than the period".into());
                }
            }
            GeneratorKind::Uncertain { period, jitter } => {
                positive(*period, "period")?;
                non_negative(*jitter, "jitter")?;
            }
            GeneratorKind::BoundedVariability { window, max } => {
                positive(*window, "window")?;
                if *max == 0 {
                    return Err("max must be at least 1".into());
                }
            }
            GeneratorKind::BiboundedVariability { window, min, max } => {
                positive(*window, "window")?;
                if *min == 0 || min > max {
                    return Err("bounds must satisfy 1 <= min <= max".into());
                }
            }
        }
        if let Some(times) = &self.arrivals {
            if times.len() != self.count as usize {
                return Err(format!("{} explicit arrivals for count {}", times.len(), self.count));
            }
            if times.iter().any(|t| t.is_negative()) || times.windows(2).any(|w| w[0] > w[1]) {
                return Err("explicit arrivals must be non-negative and sorted".into());
            }
            if !self.admits(times) {
                return Err("explicit arrivals violate the generator's constraints".into());
            }
        }
        Ok(())
    }

    /// Whether `times` is a possible arrival sequence of this generator.
    pub fn admits(&self, times: &[Time]) -> bool {
        match &self.kind {
            GeneratorKind::BoundedVariability { window, max } => {
                check_variability(times, *window, None, *max).unwrap_or(false)
            }
            GeneratorKind::BiboundedVariability { window, min, max } => {
                check_variability(times, *window, Some(*min), *max).unwrap_or(false)
            }
            _ => {
                let mut prev = Time::ZERO;
                for (i, t) in times.iter().enumerate() {
                    match arrival_window(self, i as u32 + 1, prev) {
                        Ok(w) if w.contains(*t) => prev = *t,
                        _ => return false,
                    }
                }
                true
            }
        }
    }
}

fn positive(t: Time, what: &str) -> Result<(), String> {
    if t.ticks() <= 0 {
        return Err(format!("{what} must be positive"));
    }
    Ok(())
}

fn non_negative(t: Time, what: &str) -> Result<(), String> {
    if t.is_negative() {
        return Err(format!("{what} must be non-negative"));
    }
    Ok(())
}

fn scaled(d: Time, k: u32) -> Time {
    Time::from_ticks(d.ticks() * (k as i64 - 1))
}

/// Window of arrival `k` (1-based) given the previous arrival time `prev`
/// (ignored for `k = 1`).
pub fn arrival_window(g: &Generator, k: u32, prev: Time) -> Result<TimeInterval, GeneratorError> {
    if k == 0 {
        return Err(GeneratorError::InvalidArgument("instance index starts at 1".into()));
    }
    match g.kind {
        GeneratorKind::Periodic { period } => Ok(TimeInterval::point(scaled(period, k))),
        GeneratorKind::Jitter { period, jitter } => {
            let lo = scaled(period, k);
            Ok(TimeInterval { lo, hi: lo + jitter })
        }
        GeneratorKind::Uncertain { period, jitter } => {
            let lo = if k == 1 { Time::ZERO } else { prev + period };
            Ok(TimeInterval { lo, hi: lo + jitter })
        }
        _ => Err(GeneratorError::UnsupportedWindow(g.kind.name())),
    }
}

/// Draws `count` arrivals, each uniform over its window.
pub fn sample_arrivals(g: &Generator, rng: &mut Stream) -> Result<Vec<Time>, GeneratorError> {
    if matches!(g.kind, GeneratorKind::BoundedVariability { .. } | GeneratorKind::BiboundedVariability { .. }) {
        return Err(GeneratorError::NoProbabilisticSemantics(g.kind.name()));
    }
    let mut out = Vec::with_capacity(g.count as usize);
    let mut prev = Time::ZERO;
    for k in 1..=g.count {
        let w = arrival_window(g, k, prev)?;
        prev = Time::from_ticks(uniform_ticks(rng, w.lo.ticks(), w.hi.ticks()));
        out.push(prev);
    }
    Ok(out)
}

/// The explicit arrival list if one is given, otherwise a sample.
pub fn arrivals(g: &Generator, rng: &mut Stream) -> Result<Vec<Time>, GeneratorError> {
    match &g.arrivals {
        Some(times) => Ok(times.clone()),
        None => sample_arrivals(g, rng),
    }
}

/// Window-count check over sorted `times`: every closed window `[r, r+Δ]`
/// holds at most `max` events, and, when `min` is given, every such window
/// with `r + Δ <= last` holds at least `min`.
pub fn check_variability(times: &[Time], window: Time, min: Option<u32>, max: u32) -> Result<bool, GeneratorError> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(GeneratorError::InvalidArgument("event times must be sorted".into()));
    }
    if window.is_negative() {
        return Err(GeneratorError::InvalidArgument("window must be non-negative".into()));
    }
    let count_in = |lo_incl: bool, lo: Time, hi: Time| {
        let start = if lo_incl { times.partition_point(|t| *t < lo) } else { times.partition_point(|t| *t <= lo) };
        times.partition_point(|t| *t <= hi) - start
    };
    // A window holding the most events can be slid right until it starts at one.
    for &t in times {
        if count_in(true, t, t + window) > max as usize {
            return Ok(false);
        }
    }
    let (Some(min), Some(&last)) = (min, times.last()) else {
        return Ok(true);
    };
    // The emptiest windows start at 0 or just after an event.
    if window <= last && count_in(true, Time::ZERO, window) < min as usize {
        return Ok(false);
    }
    for &t in times {
        if t + window < last && count_in(false, t, t + window) < min as usize {
            return Ok(false);
        }
    }
    Ok(true)
}
