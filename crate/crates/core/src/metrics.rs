//! Measures extracted from timed traces and their statistical summaries.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{Platform, SystemModel};
use crate::plan::Plan;
use crate::simulator::{Event, EventKind, TimedTrace};
use crate::time::{Freq, Time};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("processor `{processor}` has no power entry for frequency {frequency}")]
    MissingPowerEntry { processor: String, frequency: Freq },
}

/// Selects events by kind, job type and task. `*` or an omitted field
/// matches anything. Written `kind[:job[:task]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPattern {
    pub kind: PatternKind,
    pub job: Option<String>,
    pub task: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    Arrival,
    Start,
    End,
    Overflow,
}

impl EventPattern {
    /// The job type and instance of a matching event.
    pub fn matches<'a>(&self, e: &'a Event) -> Option<(&'a str, u32)> {
        let (kind, job, instance, task) = match &e.kind {
            EventKind::Arrival { job, instance } => (PatternKind::Arrival, job, *instance, None),
            EventKind::Start { job, instance, task, .. } => (PatternKind::Start, job, *instance, Some(task)),
            EventKind::End { job, instance, task, .. } => (PatternKind::End, job, *instance, Some(task)),
            EventKind::Overflow { job, instance } => (PatternKind::Overflow, job, *instance, None),
            EventKind::FreqSet { .. } => return None,
        };
        let job_ok = self.job.as_ref().is_none_or(|j| j == job);
        let task_ok = match (&self.task, task) {
            (None, _) => true,
            (Some(p), Some(t)) => p == t,
            (Some(_), None) => false,
        };
        (kind == self.kind && job_ok && task_ok).then_some((job.as_str(), instance))
    }
}

impl fmt::Display for EventPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            PatternKind::Arrival => "arrival",
            PatternKind::Start => "start",
            PatternKind::End => "end",
            PatternKind::Overflow => "overflow",
        };
        f.write_str(kind)?;
        match (&self.job, &self.task) {
            (None, None) => Ok(()),
            (j, None) => write!(f, ":{}", j.as_deref().unwrap_or("*")),
            (j, Some(t)) => write!(f, ":{}:{t}", j.as_deref().unwrap_or("*")),
        }
    }
}

impl FromStr for EventPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let kind = match parts.next().unwrap_or_default() {
            "arrival" => PatternKind::Arrival,
            "start" => PatternKind::Start,
            "end" => PatternKind::End,
            "overflow" => PatternKind::Overflow,
            other => return Err(format!("unknown event kind `{other}` in pattern `{s}`")),
        };
        let field = |p: Option<&str>| p.filter(|x| *x != "*" && !x.is_empty()).map(str::to_string);
        let job = field(parts.next());
        let task = field(parts.next());
        if parts.next().is_some() {
            return Err(format!("pattern `{s}` has too many fields"));
        }
        if task.is_some() && matches!(kind, PatternKind::Arrival | PatternKind::Overflow) {
            return Err(format!("`{s}`: arrival and overflow events carry no task"));
        }
        Ok(Self { kind, job, task })
    }
}

/// A measure taken from each trace. Textual forms: `makespan`,
/// `job_latency:<job>`, `utilization:<resource>`, `energy`, `power`,
/// `overflow_count`, `event_pair:<from>-><to>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricSpec {
    JobLatency {
        job: String,
    },
    Makespan,
    Utilization {
        resource: String,
    },
    Energy,
    /// Energy divided by the horizon.
    Power,
    OverflowCount,
    EventPair {
        from: EventPattern,
        to: EventPattern,
    },
}

impl MetricSpec {
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::JobLatency { job } => write!(f, "job_latency:{job}"),
            MetricSpec::Makespan => f.write_str("makespan"),
            MetricSpec::Utilization { resource } => write!(f, "utilization:{resource}"),
            MetricSpec::Energy => f.write_str("energy"),
            MetricSpec::Power => f.write_str("power"),
            MetricSpec::OverflowCount => f.write_str("overflow_count"),
            MetricSpec::EventPair { from, to } => write!(f, "event_pair:{from}->{to}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
        let need = |what: &str| {
            arg.filter(|a| !a.is_empty()).map(str::to_string).ok_or_else(|| format!("`{head}` needs a {what}"))
        };
        Ok(match head {
            "makespan" => MetricSpec::Makespan,
            "energy" => MetricSpec::Energy,
            "power" => MetricSpec::Power,
            "overflow_count" => MetricSpec::OverflowCount,
            "job_latency" => MetricSpec::JobLatency { job: need("job type")? },
            "utilization" => MetricSpec::Utilization { resource: need("resource")? },
            "event_pair" => {
                let body = need("pattern pair")?;
                let (from, to) = body.split_once("->").ok_or_else(|| format!("`{s}`: expected `from->to`"))?;
                MetricSpec::EventPair { from: from.parse()?, to: to.parse()? }
            }
            _ => return Err(format!("unknown metric `{s}`")),
        })
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Makespan, latency of every generated job type, energy, power, overflow
/// count and the utilization of every active resource.
pub fn default_metrics(m: &SystemModel, plan: &Plan) -> Vec<MetricSpec> {
    let mut out = vec![MetricSpec::Makespan];
    let mut jobs: Vec<&str> = m.generators.iter().map(|g| g.job_type.as_str()).collect();
    jobs.dedup();
    out.extend(jobs.into_iter().map(|j| MetricSpec::JobLatency { job: j.to_string() }));
    out.extend([MetricSpec::Energy, MetricSpec::Power, MetricSpec::OverflowCount]);
    out.extend(plan.resources.iter().map(|r| MetricSpec::Utilization { resource: r.id.clone() }));
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extracted {
    pub values: Vec<f64>,
    /// Pairs whose first event had no partner.
    pub unmatched: usize,
}

/// Values of `spec` over `trace`, with the horizon at the last event.
pub fn extract(trace: &TimedTrace, spec: &MetricSpec, platform: &Platform) -> Result<Extracted, MetricsError> {
    extract_with_horizon(trace, spec, platform, trace.last_time())
}

pub fn extract_with_horizon(
    trace: &TimedTrace,
    spec: &MetricSpec,
    platform: &Platform,
    horizon: Time,
) -> Result<Extracted, MetricsError> {
    let one = |v: f64| Ok(Extracted { values: vec![v], unmatched: 0 });
    match spec {
        MetricSpec::Makespan => {
            let first = trace.events.iter().find(|e| matches!(e.kind, EventKind::Arrival { .. }));
            let last = trace.events.iter().rev().find(|e| matches!(e.kind, EventKind::End { .. }));
            match (first, last) {
                (Some(a), Some(b)) => one((b.time - a.time).as_f64()),
                _ => Ok(Extracted::default()),
            }
        }
        MetricSpec::JobLatency { job } => Ok(job_latencies(trace, job)),
        MetricSpec::EventPair { from, to } => Ok(event_pairs(trace, from, to)),
        MetricSpec::OverflowCount => one(overflow_count(trace) as f64),
        MetricSpec::Utilization { resource } => {
            if horizon == Time::ZERO {
                known_resource(trace, resource)?;
                return one(0.0);
            }
            one(utilization(trace, resource, horizon)?)
        }
        MetricSpec::Energy => one(energy(trace, platform, horizon)?),
        MetricSpec::Power => {
            let e = energy(trace, platform, horizon)?;
            one(if horizon == Time::ZERO { 0.0 } else { e / horizon.as_f64() })
        }
    }
}

/// Completion of each admitted instance minus its arrival, in instance order.
fn job_latencies(trace: &TimedTrace, job: &str) -> Extracted {
    let mut arrival: BTreeMap<u32, Time> = BTreeMap::new();
    let mut dropped = 0;
    let mut done: HashMap<u32, Time> = HashMap::new();
    for e in &trace.events {
        match &e.kind {
            EventKind::Arrival { job: j, instance } if j == job => {
                arrival.insert(*instance, e.time);
            }
            EventKind::Overflow { job: j, instance } if j == job => {
                arrival.remove(instance);
                dropped += 1;
            }
            EventKind::End { job: j, instance, .. } if j == job => {
                done.insert(*instance, e.time);
            }
            _ => {}
        }
    }
    let mut out = Extracted { values: Vec::with_capacity(arrival.len()), unmatched: dropped };
    for (k, a) in arrival {
        match done.get(&k) {
            Some(&c) => out.values.push((c - a).as_f64()),
            None => out.unmatched += 1,
        }
    }
    out
}

/// Distance from the first `from` event to the first later-or-equal `to`
/// event of the same job instance.
fn event_pairs(trace: &TimedTrace, from: &EventPattern, to: &EventPattern) -> Extracted {
    let mut open: BTreeMap<(String, u32), Time> = BTreeMap::new();
    let mut closed: BTreeMap<(String, u32), f64> = BTreeMap::new();
    for e in &trace.events {
        if let Some((job, k)) = to.matches(e) {
            let key = (job.to_string(), k);
            if let Some(&t0) = open.get(&key) {
                closed.entry(key).or_insert((e.time - t0).as_f64());
            }
        }
        if let Some((job, k)) = from.matches(e) {
            open.entry((job.to_string(), k)).or_insert(e.time);
        }
    }
    let unmatched = open.keys().filter(|k| !closed.contains_key(*k)).count();
    Extracted { values: closed.into_values().collect(), unmatched }
}

pub fn overflow_count(trace: &TimedTrace) -> usize {
    trace.events.iter().filter(|e| matches!(e.kind, EventKind::Overflow { .. })).count()
}

fn known_resource(trace: &TimedTrace, resource: &str) -> Result<(), MetricsError> {
    if trace.meta.resources.iter().any(|r| r == resource) {
        Ok(())
    } else {
        Err(MetricsError::InvalidArgument(format!("unknown resource `{resource}`")))
    }
}

/// Busy intervals of `resource`, with the frequency of each start.
fn busy_intervals<'a>(trace: &'a TimedTrace, resource: &'a str) -> impl Iterator<Item = (Time, Time, Freq)> + 'a {
    let mut open: Option<(Time, Freq)> = None;
    trace.events.iter().filter_map(move |e| match &e.kind {
        EventKind::Start { resource: r, freq, .. } if r == resource => {
            open = Some((e.time, *freq));
            None
        }
        EventKind::End { resource: r, .. } if r == resource => open.take().map(|(s, f)| (s, e.time, f)),
        _ => None,
    })
}

fn overlap(a: Time, b: Time, from: Time, to: Time) -> f64 {
    let lo = a.max(from);
    let hi = b.min(to);
    if hi > lo {
        (hi - lo).as_f64()
    } else {
        0.0
    }
}

/// Fraction of `[0, horizon]` during which `resource` is busy.
pub fn utilization(trace: &TimedTrace, resource: &str, horizon: Time) -> Result<f64, MetricsError> {
    known_resource(trace, resource)?;
    if horizon <= Time::ZERO {
        return Err(MetricsError::InvalidArgument("horizon must be positive".into()));
    }
    let busy: f64 = busy_intervals(trace, resource).map(|(s, e, _)| overlap(s, e, Time::ZERO, horizon)).sum();
    Ok(busy / horizon.as_f64())
}

/// Energy over `[0, horizon]`: each active component draws its static power
/// while on, plus its dynamic power while busy.
pub fn energy(trace: &TimedTrace, platform: &Platform, horizon: Time) -> Result<f64, MetricsError> {
    if horizon < trace.last_time() {
        return Err(MetricsError::InvalidArgument(format!(
            "horizon {horizon} ends before the last event at {}",
            trace.last_time()
        )));
    }
    energy_between(trace, platform, Time::ZERO, horizon)
}

/// Energy drawn during `[from, to]`.
pub fn energy_between(trace: &TimedTrace, platform: &Platform, from: Time, to: Time) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    for id in &trace.meta.resources {
        if let Some(p) = platform.processor(id) {
            let watts = |f: Freq| {
                p.power_at(f)
                    .copied()
                    .ok_or_else(|| MetricsError::MissingPowerEntry { processor: p.id.clone(), frequency: f })
            };
            // Frequency segments from freq_set events.
            let mut cur = p.default_frequency().unwrap_or(Freq::ZERO);
            let mut since = Time::ZERO;
            for e in &trace.events {
                if let EventKind::FreqSet { resource, freq } = &e.kind {
                    if resource == id {
                        if e.time > since {
                            total += watts(cur)?.static_watts * overlap(since, e.time, from, to);
                        }
                        cur = *freq;
                        since = e.time;
                    }
                }
            }
            total += watts(cur)?.static_watts * overlap(since, to.max(since), from, to);
            for (s, e, f) in busy_intervals(trace, id) {
                total += watts(f)?.dynamic_watts * overlap(s, e, from, to);
            }
        } else if let Some(ic) = platform.interconnect(id) {
            total += ic.power.static_watts * overlap(Time::ZERO, to, from, to);
            for (s, e, _) in busy_intervals(trace, id) {
                total += ic.power.dynamic_watts * overlap(s, e, from, to);
            }
        } else {
            return Err(MetricsError::InvalidArgument(format!("resource `{id}` is not on the platform")));
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges; a single-valued sample has two equal edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Empty,
    Summary(Summary),
}

impl Report {
    pub fn summary(&self) -> Option<&Summary> {
        match self {
            Report::Summary(s) => Some(s),
            Report::Empty => None,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        self.summary().map(|s| s.mean)
    }

    pub fn count(&self) -> usize {
        self.summary().map_or(0, |s| s.count)
    }
}

pub const DEFAULT_BINS: usize = 20;

pub fn summarize(values: &[f64], bins: usize) -> Report {
    if values.is_empty() {
        return Report::Empty;
    }
    let bins = bins.max(1);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std =
        if n > 1 { (sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    let (min, max) = (sorted[0], sorted[n - 1]);
    let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    let p95 = sorted[rank - 1];
    let histogram = if max == min {
        Histogram { edges: vec![min, max], counts: vec![n] }
    } else {
        let width = (max - min) / bins as f64;
        let mut counts = vec![0; bins];
        for v in &sorted {
            counts[(((v - min) / width) as usize).min(bins - 1)] += 1;
        }
        let edges = (0..=bins).map(|i| if i == bins { max } else { min + width * i as f64 }).collect();
        Histogram { edges, counts }
    };
    Report::Summary(Summary { count: n, mean, std, min, max, median, p95, histogram })
}

/// Two-column `bin_left,count` table.
pub fn write_histogram_csv(w: &mut impl Write, report: &Report) -> std::io::Result<()> {
    writeln!(w, "bin_left,count")?;
    if let Some(s) = report.summary() {
        for (left, c) in s.histogram.edges.iter().zip(&s.histogram.counts) {
            writeln!(w, "{left:.6},{c}")?;
        }
    }
    Ok(())
}

/// One row per run and one column per metric; multi-valued metrics are
/// averaged within the run, and empty cells mean no value.
pub fn write_samples_csv(
    w: &mut impl Write,
    metrics: &[MetricSpec],
    runs: &[(u32, Vec<Vec<f64>>)],
) -> std::io::Result<()> {
    write!(w, "run")?;
    for m in metrics {
        write!(w, ",{m}")?;
    }
    writeln!(w)?;
    for (run, values) in runs {
        write!(w, "{run}")?;
        for v in values {
            if v.is_empty() {
                write!(w, ",")?;
            } else {
                write!(w, ",{:.6}", v.iter().sum::<f64>() / v.len() as f64)?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Long form: one row per run, metric and value.
pub fn write_values_csv(
    w: &mut impl Write,
    metrics: &[MetricSpec],
    runs: &[(u32, Vec<Vec<f64>>)],
) -> std::io::Result<()> {
    writeln!(w, "run,metric,index,value")?;
    for (run, values) in runs {
        for (m, vs) in metrics.iter().zip(values) {
            for (i, v) in vs.iter().enumerate() {
                writeln!(w, "{run},{m},{i},{v:.6}")?;
            }
        }
    }
    Ok(())
}
