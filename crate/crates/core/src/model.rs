//! Applications, platforms and deployments.
//!
//! A [`SystemModel`] is the unit of analysis: job types (task-data graphs),
//! the platform they run on, one arrival generator per job type and the
//! deployment policy. Both analysis engines consume the same model.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::generators::Generator;
use crate::time::{Freq, Rate, Time, Volume, Work};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} requires a transfer but the platform has no interconnect")]
    MissingInterconnect(String),
    #[error("unknown interconnect `{0}`")]
    UnknownInterconnect(String),
    #[error("unknown memory `{0}`")]
    UnknownMemory(String),
}

/// Bounded uncertainty on the amount of work of a task, `[lo, hi]` cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WorkInterval {
    pub lo: Work,
    pub hi: Work,
}

impl WorkInterval {
    pub fn new(lo: Work, hi: Work) -> Result<Self, ModelError> {
        if lo.is_negative() || lo > hi {
            return Err(ModelError::InvalidArgument(format!("work interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn units(lo: f64, hi: f64) -> Self {
        Self { lo: Work::from_f64(lo), hi: Work::from_f64(hi) }
    }

    pub fn is_valid(&self) -> bool {
        !self.lo.is_negative() && self.lo <= self.hi
    }
}

/// A closed interval of time. `hi` may be [`Time::INFINITY`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    pub lo: Time,
    pub hi: Time,
}

impl TimeInterval {
    pub fn new(lo: Time, hi: Time) -> Result<Self, ModelError> {
        if lo.is_negative() || lo > hi {
            return Err(ModelError::InvalidArgument(format!("time interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub const fn point(t: Time) -> Self {
        Self { lo: t, hi: t }
    }

    pub fn units(lo: f64, hi: f64) -> Self {
        Self { lo: Time::from_f64(lo), hi: Time::from_f64(hi) }
    }

    pub fn contains(&self, t: Time) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        !self.hi.is_infinite()
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &TimeInterval) -> TimeInterval {
        TimeInterval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for WorkInterval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.lo, self.hi).serialize(s)
    }
}

impl<'de> Deserialize<'de> for WorkInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (lo, hi) = <(Work, Work)>::deserialize(d)?;
        Ok(Self { lo, hi })
    }
}

impl Serialize for TimeInterval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let hi = (!self.hi.is_infinite()).then_some(self.hi);
        (self.lo, hi).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimeInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (lo, hi) = <(Time, Option<Time>)>::deserialize(d)?;
        Ok(Self { lo, hi: hi.unwrap_or(Time::INFINITY) })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[default]
    Computation,
    /// Data transfer occupying the named interconnect; inserted by
    /// [`expand_comm_tasks`].
    Communication { interconnect: String },
}

impl TaskKind {
    pub fn is_computation(&self) -> bool {
        matches!(self, TaskKind::Computation)
    }
}

/// Data a task reads before it starts or writes after it ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transfer {
    pub volume: Volume,
    pub memory: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interconnect: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub work: WorkInterval,
    #[serde(default, skip_serializing_if = "TaskKind::is_computation")]
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Transfer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Transfer>,
}

impl TaskSpec {
    pub fn new(id: impl Into<String>, work: WorkInterval) -> Self {
        Self { id: id.into(), work, kind: TaskKind::Computation, input: None, output: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DataEdge {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub volume: Volume,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interconnect: Option<String>,
}

impl DataEdge {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self { from: from.into(), to: to.into(), volume: Volume::ZERO, interconnect: None }
    }

    /// Key used by [`Deployment::data_placement`].
    pub fn key(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JobType {
    pub name: String,
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub edges: Vec<DataEdge>,
}

impl JobType {
    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEntry {
    pub frequency: Freq,
    pub static_watts: f64,
    pub dynamic_watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Processor {
    pub id: String,
    pub frequencies: Vec<Freq>,
    pub power: Vec<PowerEntry>,
    #[serde(default = "default_true")]
    pub initially_on: bool,
}

fn default_true() -> bool {
    true
}

impl Processor {
    pub fn power_at(&self, f: Freq) -> Option<&PowerEntry> {
        self.power.iter().find(|p| p.frequency == f)
    }

    /// Frequency used when the deployment does not choose one.
    pub fn default_frequency(&self) -> Option<Freq> {
        self.frequencies.iter().copied().min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locality {
    Local,
    Offchip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Memory {
    pub id: String,
    #[serde(default)]
    pub access_time: Time,
    pub locality: Locality,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerPair {
    pub static_watts: f64,
    pub dynamic_watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interconnect {
    pub id: String,
    pub rate: Rate,
    #[serde(default)]
    pub init_latency: Time,
    #[serde(default)]
    pub power: PowerPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    pub processors: Vec<Processor>,
    #[serde(default)]
    pub memories: Vec<Memory>,
    #[serde(default)]
    pub interconnects: Vec<Interconnect>,
}

impl Platform {
    pub fn processor(&self, id: &str) -> Option<&Processor> {
        self.processors.iter().find(|p| p.id == id)
    }

    pub fn memory(&self, id: &str) -> Option<&Memory> {
        self.memories.iter().find(|m| m.id == id)
    }

    pub fn interconnect(&self, id: &str) -> Option<&Interconnect> {
        self.interconnects.iter().find(|i| i.id == id)
    }

    /// Processors available to the scheduler, in declaration order.
    pub fn active_processors(&self) -> impl Iterator<Item = &Processor> {
        self.processors.iter().filter(|p| p.initially_on)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    FifoGlobal,
    FifoPriorityGlobal,
    FifoLocal,
    StrictPriorityLocal,
}

impl Policy {
    pub fn is_local(self) -> bool {
        matches!(self, Policy::FifoLocal | Policy::StrictPriorityLocal)
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::FifoGlobal => "fifo_global",
            Policy::FifoPriorityGlobal => "fifo_priority_global",
            Policy::FifoLocal => "fifo_local",
            Policy::StrictPriorityLocal => "strict_priority_local",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown policy `{s}`"))
    }
}

/// Mapping, priority and frequency tables are keyed by task id and apply to
/// every job type that declares a task with that id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub policy: Policy,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mapping: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub priorities: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub task_frequency: BTreeMap<String, Freq>,
    /// Edge key (`from->to`) to memory id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub data_placement: BTreeMap<String, String>,
    pub queue_capacity: u32,
}

impl Deployment {
    pub fn new(policy: Policy, queue_capacity: u32) -> Self {
        Self {
            policy,
            mapping: BTreeMap::new(),
            priorities: BTreeMap::new(),
            task_frequency: BTreeMap::new(),
            data_placement: BTreeMap::new(),
            queue_capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub job_types: Vec<JobType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    #[serde(default)]
    pub name: String,
    pub application: Application,
    pub platform: Platform,
    pub generators: Vec<Generator>,
    pub deployment: Deployment,
    /// Bound K on simultaneously live job instances; also the number of
    /// instances per generator analyzed formally.
    pub instance_bound: u32,
}

impl SystemModel {
    pub fn job_type(&self, name: &str) -> Option<&JobType> {
        self.application.job_types.iter().find(|j| j.name == name)
    }
}

/// A broken model invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    NoJobTypes,
    DuplicateJobType { job: String },
    EmptyJobType { job: String },
    DuplicateTask { job: String, task: String },
    InvalidWork { job: String, task: String },
    AuthoredCommunication { job: String, task: String },
    UnknownTask { job: String, task: String },
    CyclicPrecedence { job: String, tasks: Vec<String> },
    NoProcessors,
    NoActiveProcessor,
    DuplicateId { id: String },
    EmptyFrequencies { processor: String },
    NonPositiveFrequency { processor: String },
    MissingPowerEntry { processor: String, frequency: String },
    NegativeWatts { component: String },
    NonPositiveRate { interconnect: String },
    NegativeTime { component: String },
    UnknownMemory { id: String },
    UnknownInterconnect { id: String },
    UnknownJobType { job: String },
    MissingGenerator { job: String },
    DuplicateGenerator { job: String },
    InvalidGenerator { job: String, reason: String },
    UnknownProcessor { id: String },
    ProcessorOff { id: String },
    DeploymentUnknownTask { task: String },
    IncompleteMapping { job: String, task: String },
    DuplicatePriority { processor: String, priority: i64 },
    PriorityDeadlock { job: String, tasks: Vec<String> },
    UnsupportedFrequency { task: String, frequency: String },
    UnknownPlacementEdge { edge: String },
    ZeroQueueCapacity,
    ZeroInstanceBound,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoJobTypes => write!(f, "application declares no job type"),
            DuplicateJobType { job } => write!(f, "job type `{job}` declared twice"),
            EmptyJobType { job } => write!(f, "job type `{job}` has no task"),
            DuplicateTask { job, task } => write!(f, "task `{task}` declared twice in `{job}`"),
            InvalidWork { job, task } => {
                write!(f, "task `{job}/{task}` has an invalid work interval")
            }
            AuthoredCommunication { job, task } => {
                write!(f, "task `{job}/{task}` is a communication task; these are derived from edges")
            }
            UnknownTask { job, task } => {
                write!(f, "edge in `{job}` references unknown task `{task}`")
            }
            CyclicPrecedence { job, tasks } => {
                write!(f, "precedence cycle in `{job}` through {}", tasks.join(", "))
            }
            NoProcessors => write!(f, "platform declares no processor"),
            NoActiveProcessor => write!(f, "no processor is initially on"),
            DuplicateId { id } => write!(f, "platform id `{id}` is not unique"),
            EmptyFrequencies { processor } => write!(f, "processor `{processor}` has no frequency"),
            NonPositiveFrequency { processor } => {
                write!(f, "processor `{processor}` has a non-positive frequency")
            }
            MissingPowerEntry { processor, frequency } => {
                write!(f, "processor `{processor}` has no power entry for frequency {frequency}")
            }
            NegativeWatts { component } => write!(f, "`{component}` has negative power"),
            NonPositiveRate { interconnect } => {
                write!(f, "interconnect `{interconnect}` has a non-positive rate")
            }
            NegativeTime { component } => write!(f, "`{component}` has a negative time parameter"),
            UnknownMemory { id } => write!(f, "unknown memory `{id}`"),
            UnknownInterconnect { id } => write!(f, "unknown interconnect `{id}`"),
            UnknownJobType { job } => write!(f, "generator references unknown job type `{job}`"),
            MissingGenerator { job } => write!(f, "job type `{job}` has no generator"),
            DuplicateGenerator { job } => write!(f, "job type `{job}` has several generators"),
            InvalidGenerator { job, reason } => write!(f, "generator of `{job}`: {reason}"),
            UnknownProcessor { id } => write!(f, "unknown processor `{id}`"),
            ProcessorOff { id } => write!(f, "processor `{id}` is mapped but not on"),
            DeploymentUnknownTask { task } => {
                write!(f, "deployment references unknown task `{task}`")
            }
            IncompleteMapping { job, task } => {
                write!(f, "local policy requires a mapping for `{job}/{task}`")
            }
            DuplicatePriority { processor, priority } => {
                write!(f, "priority {priority} used twice on processor `{processor}`")
            }
            PriorityDeadlock { job, tasks } => {
                write!(f, "strict priority in `{job}` waits on itself through {}", tasks.join(", "))
            }
            UnsupportedFrequency { task, frequency } => {
                write!(f, "frequency {frequency} of task `{task}` is not supported by its processor")
            }
            UnknownPlacementEdge { edge } => write!(f, "data placement for unknown edge `{edge}`"),
            ZeroQueueCapacity => write!(f, "queue capacity must be positive"),
            ZeroInstanceBound => write!(f, "instance bound must be positive"),
        }
    }
}

/// Checks every model invariant. Returns an empty list iff the model is valid.
pub fn validate_model(m: &SystemModel) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_application(m, &mut out);
    validate_platform(&m.platform, &mut out);
    validate_generators(m, &mut out);
    validate_deployment(m, &mut out);
    if m.instance_bound == 0 {
        out.push(Violation::ZeroInstanceBound);
    }
    out
}

fn validate_application(m: &SystemModel, out: &mut Vec<Violation>) {
    let jobs = &m.application.job_types;
    if jobs.is_empty() {
        out.push(Violation::NoJobTypes);
    }
    let mut names = HashSet::new();
    for job in jobs {
        if !names.insert(job.name.as_str()) {
            out.push(Violation::DuplicateJobType { job: job.name.clone() });
        }
        if job.tasks.is_empty() {
            out.push(Violation::EmptyJobType { job: job.name.clone() });
        }
        let mut ids = HashSet::new();
        for t in &job.tasks {
            if !ids.insert(t.id.as_str()) {
                out.push(Violation::DuplicateTask { job: job.name.clone(), task: t.id.clone() });
            }
            if !t.work.is_valid() {
                out.push(Violation::InvalidWork { job: job.name.clone(), task: t.id.clone() });
            }
            if !t.kind.is_computation() {
                out.push(Violation::AuthoredCommunication { job: job.name.clone(), task: t.id.clone() });
            }
            for tr in t.input.iter().chain(t.output.iter()) {
                check_transfer(tr, &m.platform, out);
            }
        }
        for e in &job.edges {
            for end in [&e.from, &e.to] {
                if !ids.contains(end.as_str()) {
                    out.push(Violation::UnknownTask { job: job.name.clone(), task: end.clone() });
                }
            }
            if let Some(ic) = &e.interconnect {
                if m.platform.interconnect(ic).is_none() {
                    out.push(Violation::UnknownInterconnect { id: ic.clone() });
                }
            }
        }
        let cyclic = cyclic_tasks(job);
        if !cyclic.is_empty() {
            out.push(Violation::CyclicPrecedence { job: job.name.clone(), tasks: cyclic });
        }
    }
}

fn check_transfer(tr: &Transfer, p: &Platform, out: &mut Vec<Violation>) {
    if p.memory(&tr.memory).is_none() {
        out.push(Violation::UnknownMemory { id: tr.memory.clone() });
    }
    if let Some(ic) = &tr.interconnect {
        if p.interconnect(ic).is_none() {
            out.push(Violation::UnknownInterconnect { id: ic.clone() });
        }
    }
}

/// Tasks that lie on a precedence cycle, sorted. Edges with unknown
/// endpoints are ignored.
fn cyclic_tasks(job: &JobType) -> Vec<String> {
    let index: HashMap<&str, usize> = job.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let n = job.tasks.len();
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for e in &job.edges {
        if let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
            succ[a].push(b);
            pred[b].push(a);
        }
    }
    // Peel sources, then sinks; what remains lies on or between cycles.
    let mut alive = vec![true; n];
    for (forward, back) in [(&succ, &pred), (&pred, &succ)] {
        let mut deg: Vec<usize> = (0..n).map(|i| back[i].iter().filter(|&&j| alive[j]).count()).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&i| alive[i] && deg[i] == 0).collect();
        while let Some(i) = stack.pop() {
            alive[i] = false;
            for &j in &forward[i] {
                if alive[j] {
                    deg[j] -= 1;
                    if deg[j] == 0 {
                        stack.push(j);
                    }
                }
            }
        }
    }
    let mut out: Vec<String> = (0..n).filter(|&i| alive[i]).map(|i| job.tasks[i].id.clone()).collect();
    out.sort();
    out
}

fn validate_platform(p: &Platform, out: &mut Vec<Violation>) {
    if p.processors.is_empty() {
        out.push(Violation::NoProcessors);
    } else if p.active_processors().next().is_none() {
        out.push(Violation::NoActiveProcessor);
    }
    let mut ids = HashSet::new();
    let all_ids = p
        .processors
        .iter()
        .map(|x| &x.id)
        .chain(p.memories.iter().map(|x| &x.id))
        .chain(p.interconnects.iter().map(|x| &x.id));
    for id in all_ids {
        if !ids.insert(id.as_str()) {
            out.push(Violation::DuplicateId { id: id.clone() });
        }
    }
    for proc in &p.processors {
        if proc.frequencies.is_empty() {
            out.push(Violation::EmptyFrequencies { processor: proc.id.clone() });
        }
        if proc.frequencies.iter().any(|f| f.ticks() <= 0) {
            out.push(Violation::NonPositiveFrequency { processor: proc.id.clone() });
        }
        for f in &proc.frequencies {
            if proc.power_at(*f).is_none() {
                out.push(Violation::MissingPowerEntry { processor: proc.id.clone(), frequency: f.to_string() });
            }
        }
        if proc.power.iter().any(|e| e.static_watts < 0.0 || e.dynamic_watts < 0.0) {
            out.push(Violation::NegativeWatts { component: proc.id.clone() });
        }
    }
    for mem in &p.memories {
        if mem.access_time.is_negative() {
            out.push(Violation::NegativeTime { component: mem.id.clone() });
        }
    }
    for ic in &p.interconnects {
        if ic.rate.ticks() <= 0 {
            out.push(Violation::NonPositiveRate { interconnect: ic.id.clone() });
        }
        if ic.init_latency.is_negative() {
            out.push(Violation::NegativeTime { component: ic.id.clone() });
        }
        if ic.power.static_watts < 0.0 || ic.power.dynamic_watts < 0.0 {
            out.push(Violation::NegativeWatts { component: ic.id.clone() });
        }
    }
}

fn validate_generators(m: &SystemModel, out: &mut Vec<Violation>) {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for g in &m.generators {
        if m.job_type(&g.job_type).is_none() {
            out.push(Violation::UnknownJobType { job: g.job_type.clone() });
        }
        *seen.entry(g.job_type.as_str()).or_default() += 1;
        if let Err(reason) = g.check_parameters() {
            out.push(Violation::InvalidGenerator { job: g.job_type.clone(), reason });
        }
    }
    for job in &m.application.job_types {
        match seen.get(job.name.as_str()).copied().unwrap_or(0) {
            0 => out.push(Violation::MissingGenerator { job: job.name.clone() }),
            1 => {}
            _ => out.push(Violation::DuplicateGenerator { job: job.name.clone() }),
        }
    }
}

fn validate_deployment(m: &SystemModel, out: &mut Vec<Violation>) {
    let d = &m.deployment;
    let p = &m.platform;
    let all_tasks: BTreeSet<&str> =
        m.application.job_types.iter().flat_map(|j| j.tasks.iter().map(|t| t.id.as_str())).collect();

    for (task, proc) in &d.mapping {
        if !all_tasks.contains(task.as_str()) {
            out.push(Violation::DeploymentUnknownTask { task: task.clone() });
        }
        match p.processor(proc) {
            None => out.push(Violation::UnknownProcessor { id: proc.clone() }),
            Some(pr) if !pr.initially_on => out.push(Violation::ProcessorOff { id: proc.clone() }),
            Some(_) => {}
        }
    }
    for task in d.priorities.keys().chain(d.task_frequency.keys()) {
        if !all_tasks.contains(task.as_str()) {
            out.push(Violation::DeploymentUnknownTask { task: task.clone() });
        }
    }
    if d.policy.is_local() {
        for job in &m.application.job_types {
            for t in &job.tasks {
                if !d.mapping.contains_key(&t.id) {
                    out.push(Violation::IncompleteMapping { job: job.name.clone(), task: t.id.clone() });
                }
            }
        }
    }
    if d.policy == Policy::StrictPriorityLocal {
        let mut used: BTreeMap<(&str, i64), usize> = BTreeMap::new();
        for job in &m.application.job_types {
            for t in &job.tasks {
                if let Some(proc) = d.mapping.get(&t.id) {
                    let prio = d.priorities.get(&t.id).copied().unwrap_or(0);
                    *used.entry((proc.as_str(), prio)).or_default() += 1;
                }
            }
        }
        for ((proc, priority), n) in used {
            if n > 1 {
                out.push(Violation::DuplicatePriority { processor: proc.to_string(), priority });
            }
        }
        for job in &m.application.job_types {
            if let Some(tasks) = priority_deadlock(job, d) {
                out.push(Violation::PriorityDeadlock { job: job.name.clone(), tasks });
            }
        }
    }
    for (task, f) in &d.task_frequency {
        let mapped = d.policy.is_local().then(|| d.mapping.get(task).and_then(|id| p.processor(id)));
        let supported = match mapped.flatten() {
            Some(pr) => pr.frequencies.contains(f),
            None => p.active_processors().all(|pr| pr.frequencies.contains(f)),
        };
        if !supported {
            out.push(Violation::UnsupportedFrequency { task: task.clone(), frequency: f.to_string() });
        }
    }
    let edges: BTreeSet<String> =
        m.application.job_types.iter().flat_map(|j| j.edges.iter().map(DataEdge::key)).collect();
    for (edge, mem) in &d.data_placement {
        if !edges.contains(edge) {
            out.push(Violation::UnknownPlacementEdge { edge: edge.clone() });
        }
        if p.memory(mem).is_none() {
            out.push(Violation::UnknownMemory { id: mem.clone() });
        }
    }
    if d.queue_capacity == 0 {
        out.push(Violation::ZeroQueueCapacity);
    }
}

/// Under strict priority a task cannot start before every higher-priority
/// task on its processor has started. Together with precedence this forms a
/// wait graph; a cycle in it means the instance never completes. Returns the
/// tasks left on a cycle.
fn priority_deadlock(job: &JobType, d: &Deployment) -> Option<Vec<String>> {
    let index: BTreeMap<&str, usize> = job.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let n = job.tasks.len();
    let mut succs = vec![Vec::new(); n];
    for e in &job.edges {
        if let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
            succs[a].push(b);
        }
    }
    let prio = |i: usize| d.priorities.get(&job.tasks[i].id).copied().unwrap_or(0);
    let pe = |i: usize| d.mapping.get(&job.tasks[i].id);
    for (a, out) in succs.iter_mut().enumerate() {
        out.extend((0..n).filter(|&b| a != b && pe(a).is_some() && pe(a) == pe(b) && prio(a) > prio(b)));
    }
    let mut indeg = vec![0usize; n];
    for s in succs.iter().flatten() {
        indeg[*s] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(i) = ready.pop() {
        for &s in &succs[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    let stuck: Vec<String> = (0..n).filter(|&i| indeg[i] > 0).map(|i| job.tasks[i].id.clone()).collect();
    (!stuck.is_empty()).then_some(stuck)
}

/// Execution time of `w` at frequency `f`: `[w.lo / f, w.hi / f]`.
pub fn duration_interval(w: WorkInterval, f: Freq) -> Result<TimeInterval, ModelError> {
    if f.ticks() <= 0 {
        return Err(ModelError::InvalidArgument(format!("frequency {f} is not positive")));
    }
    if !w.is_valid() {
        return Err(ModelError::InvalidArgument(format!("work interval [{}, {}]", w.lo, w.hi)));
    }
    Ok(TimeInterval { lo: w.lo.at(f), hi: w.hi.at(f) })
}

/// Deterministic transfer time: `init_latency + volume / rate`.
pub fn comm_duration(volume: Volume, ic: &Interconnect) -> TimeInterval {
    TimeInterval::point(ic.init_latency + volume.over(ic.rate))
}

/// Inserts a communication task for every transfer the deployment makes
/// necessary:
///
/// * an edge carrying data between tasks mapped to different processors,
///   or whose data is placed in offchip memory, becomes `from -> C -> to`;
///   a zero-volume edge is pure precedence and needs no transfer;
/// * a task `input` held in offchip memory becomes a read `C -> task`;
/// * a task `output` to offchip memory becomes a write `task -> C`.
///
/// Communication tasks carry their transfer time as work at unit speed. The
/// result contains no `input`/`output` fields, so expanding it again is the
/// identity.
pub fn expand_comm_tasks(j: &JobType, d: &Deployment, p: &Platform) -> Result<JobType, ModelError> {
    let mut tasks = Vec::with_capacity(j.tasks.len());
    let mut edges = Vec::with_capacity(j.edges.len());
    let kinds: HashMap<&str, &TaskKind> = j.tasks.iter().map(|t| (t.id.as_str(), &t.kind)).collect();

    let pick_interconnect = |named: Option<&String>, what: &str| -> Result<&Interconnect, ModelError> {
        match named {
            Some(id) => p.interconnect(id).ok_or_else(|| ModelError::UnknownInterconnect(id.clone())),
            None => p.interconnects.first().ok_or_else(|| ModelError::MissingInterconnect(what.to_string())),
        }
    };
    let offchip = |mem: &str| -> Result<bool, ModelError> {
        p.memory(mem).map(|m| m.locality == Locality::Offchip).ok_or_else(|| ModelError::UnknownMemory(mem.to_string()))
    };
    let comm_task = |id: String, ic: &Interconnect, volume: Volume| {
        let d = comm_duration(volume, ic);
        TaskSpec {
            id,
            work: WorkInterval { lo: Work::from_ticks(d.lo.ticks()), hi: Work::from_ticks(d.hi.ticks()) },
            kind: TaskKind::Communication { interconnect: ic.id.clone() },
            input: None,
            output: None,
        }
    };

    for t in &j.tasks {
        if let Some(tr) = &t.input {
            if offchip(&tr.memory)? {
                let id = format!("{}.read", t.id);
                let ic = pick_interconnect(tr.interconnect.as_ref(), &id)?;
                tasks.push(comm_task(id.clone(), ic, tr.volume));
                edges.push(DataEdge { from: id, to: t.id.clone(), volume: tr.volume, interconnect: None });
            }
        }
        if let Some(tr) = &t.output {
            if offchip(&tr.memory)? {
                let id = format!("{}.write", t.id);
                let ic = pick_interconnect(tr.interconnect.as_ref(), &id)?;
                tasks.push(comm_task(id.clone(), ic, tr.volume));
                edges.push(DataEdge { from: t.id.clone(), to: id, volume: tr.volume, interconnect: None });
            }
        }
        tasks.push(TaskSpec { input: None, output: None, ..t.clone() });
    }

    for e in &j.edges {
        let touches_comm =
            [&e.from, &e.to].iter().any(|id| kinds.get(id.as_str()).is_some_and(|k| !k.is_computation()));
        let cross_pe = match (d.mapping.get(&e.from), d.mapping.get(&e.to)) {
            (Some(a), Some(b)) => a != b && e.volume > Volume::ZERO,
            _ => false,
        };
        let placed_offchip = match d.data_placement.get(&e.key()) {
            Some(mem) => offchip(mem)?,
            None => false,
        };
        if touches_comm || !(cross_pe || placed_offchip) {
            edges.push(e.clone());
            continue;
        }
        let id = e.key();
        let ic = pick_interconnect(e.interconnect.as_ref(), &id)?;
        tasks.push(comm_task(id.clone(), ic, e.volume));
        edges.push(DataEdge { from: e.from.clone(), to: id.clone(), volume: e.volume, interconnect: None });
        edges.push(DataEdge { from: id, to: e.to.clone(), volume: e.volume, interconnect: None });
    }

    Ok(JobType { name: j.name.clone(), tasks, edges })
}
