//! Discrete-event Monte-Carlo simulation.
//!
//! Each run samples arrivals and task durations uniformly from their windows
//! and drives the shared [`Runtime`]. Events at the same instant are handled
//! in batches: ends (in task order), then arrivals (in generator order), then
//! one round of dispatching. Zero-duration tasks started by that round end in
//! a later batch at the same instant.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::config::model_hash;
use crate::generators::{self, Generator, GeneratorError};
use crate::metrics::{self, MetricSpec, MetricsError, Report};
use crate::model::{SystemModel, TimeInterval};
use crate::plan::{Plan, PlanError, ResourceKind};
use crate::rng::{self, Stream};
use crate::runtime::{Arrival, Runtime};
use crate::scheduler::TaskRef;
use crate::time::{Freq, Time};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("generator of `{job}`: {source}")]
    Generator { job: String, source: GeneratorError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Arrival { job: String, instance: u32 },
    Start { job: String, instance: u32, task: String, resource: String, freq: Freq },
    End { job: String, instance: u32, task: String, resource: String },
    Overflow { job: String, instance: u32 },
    FreqSet { resource: String, freq: Freq },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: Time,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.time)?;
        match &self.kind {
            EventKind::Arrival { job, instance } => write!(f, "arrival {job} {instance}"),
            EventKind::Start { job, instance, task, resource, freq } => {
                write!(f, "start {job} {instance} {task} {resource} {freq}")
            }
            EventKind::End { job, instance, task, resource } => write!(f, "end {job} {instance} {task} {resource}"),
            EventKind::Overflow { job, instance } => write!(f, "overflow {job} {instance}"),
            EventKind::FreqSet { resource, freq } => write!(f, "freq_set {resource} {freq}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMeta {
    pub model: String,
    pub model_hash: String,
    pub seed: u64,
    pub run: u64,
    /// Resource ids in plan order: active processors, then interconnects.
    pub resources: Vec<String>,
}

/// Events of one run in processing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedTrace {
    pub meta: TraceMeta,
    pub events: Vec<Event>,
}

impl TimedTrace {
    /// Text form: `#` header lines, then one event per line.
    pub fn to_text(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let _ = writeln!(out, "# model {}", m.model);
        let _ = writeln!(out, "# model_hash {}", m.model_hash);
        let _ = writeln!(out, "# rng {}", rng::ALGORITHM);
        let _ = writeln!(out, "# seed {}", m.seed);
        let _ = writeln!(out, "# run {}", m.run);
        let _ = writeln!(out, "# resources {}", m.resources.join(" "));
        for e in &self.events {
            let _ = writeln!(out, "{e}");
        }
        out
    }

    pub fn last_time(&self) -> Time {
        self.events.last().map_or(Time::ZERO, |e| e.time)
    }
}

/// Chooses arrivals and durations for one run.
pub trait DurationSource {
    fn arrivals(&mut self, gen: usize, g: &Generator) -> Result<Vec<Time>, GeneratorError>;
    /// Duration of `task` given its window on the chosen resource.
    fn duration(&mut self, task: TaskRef, window: TimeInterval) -> Time;
}

/// Uniform sampling from a per-run stream.
pub struct Uniform(pub Stream);

impl DurationSource for Uniform {
    fn arrivals(&mut self, _gen: usize, g: &Generator) -> Result<Vec<Time>, GeneratorError> {
        generators::arrivals(g, &mut self.0)
    }

    fn duration(&mut self, _task: TaskRef, w: TimeInterval) -> Time {
        Time::from_ticks(rng::uniform_ticks(&mut self.0, w.lo.ticks(), w.hi.ticks()))
    }
}

/// A compiled model ready to run.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub plan: Plan,
    pub model_hash: String,
}

impl Simulator {
    pub fn new(m: &SystemModel) -> Result<Self, SimError> {
        Ok(Self { plan: Plan::compile(m, None)?, model_hash: model_hash(m) })
    }

    fn meta(&self, seed: u64, run: u64) -> TraceMeta {
        TraceMeta {
            model: self.plan.name.clone(),
            model_hash: self.model_hash.clone(),
            seed,
            run,
            resources: self.plan.resources.iter().map(|r| r.id.clone()).collect(),
        }
    }

    pub fn run(&self, seed: u64, run_index: u64) -> Result<TimedTrace, SimError> {
        let mut src = Uniform(rng::run_stream(seed, run_index));
        self.run_with(&mut src, seed, run_index)
    }

    pub fn run_with(&self, src: &mut dyn DurationSource, seed: u64, run_index: u64) -> Result<TimedTrace, SimError> {
        let plan = &self.plan;
        let mut arrivals = Vec::with_capacity(plan.generators.len());
        for (g, gp) in plan.generators.iter().enumerate() {
            let times = src
                .arrivals(g, &gp.generator)
                .map_err(|source| SimError::Generator { job: gp.generator.job_type.clone(), source })?;
            if times.len() != gp.count as usize || times.windows(2).any(|w| w[0] > w[1]) {
                return Err(SimError::InvalidArgument(format!(
                    "arrivals of `{}` must be {} sorted times",
                    gp.generator.job_type, gp.count
                )));
            }
            arrivals.push(times);
        }
        let mut next = vec![0usize; arrivals.len()];
        let mut rt = Runtime::new(plan);
        let mut ends: BinaryHeap<Reverse<(Time, TaskRef)>> = BinaryHeap::new();
        let mut freq: Vec<Freq> = plan.resources.iter().map(|r| r.initial_freq).collect();
        let mut events = Vec::new();
        for r in plan.resources.iter().filter(|r| r.kind == ResourceKind::Processor) {
            events.push(Event {
                time: Time::ZERO,
                kind: EventKind::FreqSet { resource: r.id.clone(), freq: r.initial_freq },
            });
        }
        let job_name = |job: u16| plan.jobs[job as usize].name.clone();

        loop {
            let t_end = ends.peek().map(|e| e.0 .0);
            let t_arr = arrivals.iter().zip(&next).filter_map(|(a, &i)| a.get(i).copied()).min();
            let now = match (t_end, t_arr) {
                (None, None) => break,
                (Some(a), None) | (None, Some(a)) => a,
                (Some(a), Some(b)) => a.min(b),
            };
            while let Some(&Reverse((t, task))) = ends.peek() {
                if t != now {
                    break;
                }
                ends.pop();
                let k = rt.instance(task.seq).expect("running task has a live instance").k;
                let (resource, _) = rt.finish(plan, task);
                events.push(Event {
                    time: now,
                    kind: EventKind::End {
                        job: job_name(task.job),
                        instance: k,
                        task: plan.task(task.job, task.task).id.clone(),
                        resource: plan.resources[resource].id.clone(),
                    },
                });
            }
            for g in 0..arrivals.len() {
                while arrivals[g].get(next[g]) == Some(&now) {
                    next[g] += 1;
                    let job = job_name(plan.generators[g].job as u16);
                    match rt.arrive(plan, g) {
                        Arrival::Admitted { k, .. } => {
                            events.push(Event { time: now, kind: EventKind::Arrival { job, instance: k } });
                        }
                        Arrival::Dropped { k } => {
                            events
                                .push(Event { time: now, kind: EventKind::Arrival { job: job.clone(), instance: k } });
                            events.push(Event { time: now, kind: EventKind::Overflow { job, instance: k } });
                        }
                    }
                }
            }
            for d in rt.dispatch_all(plan) {
                let res = &plan.resources[d.resource];
                if res.kind == ResourceKind::Processor && freq[d.resource] != d.freq {
                    freq[d.resource] = d.freq;
                    events
                        .push(Event { time: now, kind: EventKind::FreqSet { resource: res.id.clone(), freq: d.freq } });
                }
                let tp = plan.task(d.task.job, d.task.task);
                let window = tp.exec[d.resource].expect("dispatch to a supported resource").duration;
                let dur = src.duration(d.task, window);
                debug_assert!(window.contains(dur));
                ends.push(Reverse((now + dur, d.task)));
                let k = rt.instance(d.task.seq).expect("dispatched task has a live instance").k;
                events.push(Event {
                    time: now,
                    kind: EventKind::Start {
                        job: job_name(d.task.job),
                        instance: k,
                        task: tp.id.clone(),
                        resource: res.id.clone(),
                        freq: d.freq,
                    },
                });
            }
        }
        Ok(TimedTrace { meta: self.meta(seed, run_index), events })
    }
}

/// One uniform run of `m`.
pub fn simulate(m: &SystemModel, seed: u64, run_index: u64) -> Result<TimedTrace, SimError> {
    Simulator::new(m)?.run(seed, run_index)
}

#[derive(Debug, Clone)]
pub struct CampaignOptions {
    pub runs: u32,
    pub seed: u64,
    /// Empty selects [`metrics::default_metrics`].
    pub metrics: Vec<MetricSpec>,
    pub bins: usize,
    pub keep_traces: bool,
    /// Integration window for utilization and energy; defaults to each
    /// trace's last event time.
    pub horizon: Option<Time>,
}

impl CampaignOptions {
    pub fn new(runs: u32, seed: u64) -> Self {
        Self { runs, seed, metrics: Vec::new(), bins: 20, keep_traces: false, horizon: None }
    }
}

/// Metric values of one run, in the campaign's metric order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: u32,
    pub values: Vec<Vec<f64>>,
    pub overflows: usize,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub metrics: Vec<MetricSpec>,
    pub runs: Vec<RunRecord>,
    /// Aggregate over all runs' values, per metric.
    pub reports: Vec<Report>,
    pub overflow_total: usize,
    pub runs_with_overflow: usize,
    pub traces: Vec<TimedTrace>,
    pub model_hash: String,
}

impl CampaignResult {
    pub fn report(&self, name: &str) -> Option<&Report> {
        self.metrics.iter().position(|m| m.name() == name).map(|i| &self.reports[i])
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.report(name).and_then(Report::mean)
    }
}

/// `runs` independent uniform runs with the default metrics.
pub fn run_campaign(m: &SystemModel, runs: u32, seed: u64) -> Result<CampaignResult, SimError> {
    run_campaign_with(m, &CampaignOptions::new(runs, seed))
}

pub fn run_campaign_with(m: &SystemModel, opts: &CampaignOptions) -> Result<CampaignResult, SimError> {
    if opts.runs == 0 {
        return Err(SimError::InvalidArgument("a campaign needs at least one run".into()));
    }
    let sim = Simulator::new(m)?;
    let specs = if opts.metrics.is_empty() { metrics::default_metrics(m, &sim.plan) } else { opts.metrics.clone() };
    let per_run: Vec<Result<(RunRecord, Option<TimedTrace>), SimError>> = (0..opts.runs)
        .into_par_iter()
        .map(|i| {
            let trace = sim.run(opts.seed, i as u64)?;
            let horizon = opts.horizon.unwrap_or_else(|| trace.last_time());
            let values = specs
                .iter()
                .map(|s| metrics::extract_with_horizon(&trace, s, &m.platform, horizon).map(|e| e.values))
                .collect::<Result<Vec<_>, _>>()?;
            let overflows = metrics::overflow_count(&trace);
            Ok((RunRecord { run: i, values, overflows }, opts.keep_traces.then_some(trace)))
        })
        .collect();
    let mut runs = Vec::with_capacity(per_run.len());
    let mut traces = Vec::new();
    for r in per_run {
        let (rec, trace) = r?;
        runs.push(rec);
        traces.extend(trace);
    }
    let reports = (0..specs.len())
        .map(|i| {
            let all: Vec<f64> = runs.iter().flat_map(|r| r.values[i].iter().copied()).collect();
            metrics::summarize(&all, opts.bins)
        })
        .collect();
    let overflow_total = runs.iter().map(|r| r.overflows).sum();
    let runs_with_overflow = runs.iter().filter(|r| r.overflows > 0).count();
    Ok(CampaignResult {
        metrics: specs,
        runs,
        reports,
        overflow_total,
        runs_with_overflow,
        traces,
        model_hash: sim.model_hash,
    })
}
