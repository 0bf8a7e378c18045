//! Zone-graph exploration of the timed-automata network of a model.
//!
//! Every task instance is an automaton `NotEnabled -> Waiting -> Executing ->
//! Final` whose clock is reset on start and must lie in the task's duration
//! interval on end. Generators are automata over the absolute clock `T`, a
//! per-generator clock, or the ages of earlier arrivals. The scheduler is the
//! shared deterministic [`Runtime`]; dispatching is urgent, so time cannot
//! pass while a dispatch is possible.
//!
//! The search is breadth-first by progress (arrivals plus completed tasks).
//! Every transition except dispatch increases progress, so a discrete state
//! can only recur within one level and each level's visited store is dropped
//! once the level is expanded. Inclusion pruning keeps, per discrete state,
//! only zones not contained in another.
//!
//! Ties: at a dispatch-enabled instant the network may also take further
//! zero-delay ends and arrivals before dispatching. This contains the
//! simulator's batch order (ends, then arrivals, then dispatch) and may add
//! orders the simulator never takes at exact ties.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::generators::GeneratorKind;
use crate::model::{SystemModel, TimeInterval};
use crate::plan::{Plan, PlanError};
use crate::runtime::{Arrival, Runtime, TaskStatus};
use crate::scheduler::TaskRef;
use crate::time::Time;
use crate::zones::{Bound, Dbm, ZoneError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReachError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("clock budget exceeded: {required} clocks needed, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },
    #[error("search cap exceeded: more than {cap} symbolic states")]
    SearchCapExceeded { cap: usize },
    #[error("internal zone error: {0}")]
    Zone(#[from] ZoneError),
}

#[derive(Debug, Clone)]
pub struct ReachOptions {
    pub clock_budget: usize,
    /// Maximum number of stored symbolic states.
    pub state_cap: usize,
    /// Discard zones included in a visited zone of the same discrete state.
    pub pruning: bool,
    /// Drop clocks as soon as no guard or invariant reads them.
    pub purging: bool,
    /// Store one representative per class of states that differ only by a
    /// renaming of interchangeable tasks or processors. Needs `purging`.
    pub symmetry: bool,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Overrides the model's instance bound.
    pub instance_bound: Option<u32>,
    /// Collect one line per stored symbolic state.
    pub dump_graph: bool,
}

impl Default for ReachOptions {
    fn default() -> Self {
        Self {
            clock_budget: 25,
            state_cap: 20_000_000,
            pruning: true,
            purging: true,
            symmetry: true,
            workers: None,
            instance_bound: None,
            dump_graph: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InstanceLatency {
    pub job: String,
    pub instance: u32,
    /// `None` if the instance is dropped on every path.
    pub bounds: Option<TimeInterval>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReachResult {
    /// Last completion minus first arrival, over all complete runs.
    pub makespan: Option<TimeInterval>,
    pub latency: Vec<InstanceLatency>,
    pub visited: usize,
    pub pruned: usize,
    /// Distinct symbolic states in which all analyzed instances are processed.
    pub final_states: usize,
    pub overflow_reachable: bool,
    pub max_clocks: usize,
    /// Instances analyzed per generator.
    pub instances: Vec<u32>,
    #[serde(skip)]
    pub graph: Option<Vec<String>>,
}

/// Owner of one clock dimension. The layout of a state is the sorted list
/// of its owners; dimension `i + 1` belongs to owner `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClockOwner {
    /// Never reset.
    Absolute,
    /// Reset at the first arrival.
    SinceFirst,
    /// Reset at every task end.
    LastEnd,
    /// Reset at every arrival of a generator.
    Generator(u16),
    /// Reset at arrival `k` of a generator.
    ArrivalAge(u16, u32),
    /// Reset when the instance is admitted.
    Response(u32),
    /// Reset when the task starts.
    Task(TaskRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    NotEnabled,
    Waiting,
    Executing,
    Final,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskAutomaton {
    pub job: String,
    pub instance: u32,
    pub task: String,
    pub locations: Vec<Location>,
    /// End guard per resource the task may execute on.
    pub guards: Vec<(String, crate::time::Freq, TimeInterval)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorAutomaton {
    pub job: String,
    pub kind: GeneratorKind,
    pub instances: u32,
}

/// The automata of a model and the compiled plan driving them.
#[derive(Debug, Clone)]
pub struct Network {
    pub plan: Plan,
    pub automata: Vec<TaskAutomaton>,
    pub generators: Vec<GeneratorAutomaton>,
    /// Upper estimate of simultaneously live clocks.
    pub clock_estimate: usize,
    needs_last_end: bool,
    purging: bool,
    symmetry: bool,
}

/// Builds the network for the first `K` instances of every generator.
pub fn build_network(m: &SystemModel, opts: &ReachOptions) -> Result<Network, ReachError> {
    let k = opts.instance_bound.unwrap_or(m.instance_bound);
    let plan = Plan::compile(m, Some(k))?;
    let mut automata = Vec::new();
    for g in &plan.generators {
        let job = &plan.jobs[g.job];
        for i in 1..=g.count {
            for t in &job.tasks {
                let mut locations = Vec::with_capacity(4);
                if !t.preds.is_empty() {
                    locations.push(Location::NotEnabled);
                }
                locations.extend([Location::Waiting, Location::Executing, Location::Final]);
                let guards = t
                    .exec
                    .iter()
                    .enumerate()
                    .filter_map(|(r, e)| e.map(|e| (plan.resources[r].id.clone(), e.freq, e.duration)))
                    .collect();
                automata.push(TaskAutomaton {
                    job: job.name.clone(),
                    instance: i,
                    task: t.id.clone(),
                    locations,
                    guards,
                });
            }
        }
    }
    let generators = plan
        .generators
        .iter()
        .map(|g| GeneratorAutomaton {
            job: plan.jobs[g.job].name.clone(),
            kind: g.generator.kind.clone(),
            instances: g.count,
        })
        .collect();

    let total = plan.total_instances();
    let needs_last_end = total > plan.queue_capacity;
    let live_instances = total.min(plan.queue_capacity) as usize;
    let max_tasks = plan.generators.iter().map(|g| plan.jobs[g.job].tasks.len()).max().unwrap_or(0);
    let running = plan.resources.len().min(max_tasks * live_instances);
    let gen_clocks: usize = plan
        .generators
        .iter()
        .map(|g| match g.generator.kind {
            GeneratorKind::Uncertain { .. } => 1,
            GeneratorKind::BoundedVariability { max, .. } => max as usize,
            GeneratorKind::BiboundedVariability { min, max, .. } => min.max(max) as usize,
            _ => 0,
        })
        .sum();
    let uses_absolute = plan.generators.iter().any(|g| {
        matches!(
            g.generator.kind,
            GeneratorKind::Periodic { .. } | GeneratorKind::Jitter { .. } | GeneratorKind::BiboundedVariability { .. }
        )
    });
    let clock_estimate = uses_absolute as usize + 1 + needs_last_end as usize + live_instances + running + gen_clocks;
    if clock_estimate > opts.clock_budget {
        return Err(ReachError::BudgetExceeded { required: clock_estimate, budget: opts.clock_budget });
    }
    let symmetry = opts.symmetry && opts.purging && !plan.symmetry.is_trivial();
    Ok(Network { plan, automata, generators, clock_estimate, needs_last_end, purging: opts.purging, symmetry })
}

/// A discrete state with its zone.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymState {
    pub rt: Runtime,
    pub clocks: Vec<ClockOwner>,
    pub zone: Dbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Term {
    Zero,
    Clock(ClockOwner),
}

/// `a - b ≺ bound`.
#[derive(Debug, Clone, Copy)]
struct Constraint {
    a: Term,
    b: Term,
    bound: Bound,
}

fn at_most(c: ClockOwner, v: Time) -> Constraint {
    Constraint { a: Term::Clock(c), b: Term::Zero, bound: Bound::le(v) }
}

fn below(c: ClockOwner, v: Time) -> Constraint {
    Constraint { a: Term::Clock(c), b: Term::Zero, bound: Bound::lt(v) }
}

fn at_least(c: ClockOwner, v: Time) -> Constraint {
    Constraint { a: Term::Zero, b: Term::Clock(c), bound: Bound::le(Time::ZERO - v) }
}

fn above(c: ClockOwner, v: Time) -> Constraint {
    Constraint { a: Term::Zero, b: Term::Clock(c), bound: Bound::lt(Time::ZERO - v) }
}

impl SymState {
    fn pos(&self, c: ClockOwner) -> Option<usize> {
        self.clocks.binary_search(&c).ok().map(|i| i + 1)
    }

    fn term(&self, t: Term) -> usize {
        match t {
            Term::Zero => 0,
            Term::Clock(c) => self.pos(c).unwrap_or_else(|| panic!("clock {c:?} is not live")),
        }
    }

    /// Adds `c` as a fresh zero clock, or resets it if live.
    fn start_clock(&mut self, c: ClockOwner) -> Result<(), ZoneError> {
        match self.clocks.binary_search(&c) {
            Ok(i) => self.zone.reset(i + 1),
            Err(i) => {
                self.clocks.insert(i, c);
                self.zone.insert_zero_clock(i + 1);
                Ok(())
            }
        }
    }

    fn drop_clock(&mut self, c: ClockOwner) {
        if let Ok(i) = self.clocks.binary_search(&c) {
            self.clocks.remove(i);
            self.zone.remove_clock(i + 1);
        }
    }

    /// Applies constraints; false if the zone became empty.
    fn apply(&mut self, cs: &[Constraint]) -> Result<bool, ZoneError> {
        for c in cs {
            let (i, j) = (self.term(c.a), self.term(c.b));
            if !self.zone.constrain(i, j, c.bound)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn bounds_of(&self, c: ClockOwner) -> Result<TimeInterval, ZoneError> {
        self.zone.clock_bounds(self.pos(c).expect("clock is live"))
    }
}

/// What expanding one state produced.
#[derive(Default)]
struct Expansion {
    same_level: Vec<SymState>,
    next_level: Vec<SymState>,
    latencies: Vec<(u16, u32, TimeInterval)>,
    makespan: Option<TimeInterval>,
    overflow: bool,
    is_final: bool,
}

impl Network {
    pub fn initial_state(&self) -> SymState {
        let mut s = SymState { rt: Runtime::new(&self.plan), clocks: Vec::new(), zone: Dbm::zero(0) };
        if self.absolute_needed(&s.rt) || (!self.purging && self.absolute_ever_needed()) {
            s.clocks.push(ClockOwner::Absolute);
        }
        for (g, gp) in self.plan.generators.iter().enumerate() {
            if matches!(gp.generator.kind, GeneratorKind::Uncertain { .. }) {
                s.clocks.push(ClockOwner::Generator(g as u16));
            }
        }
        s.clocks.sort();
        s.zone = Dbm::zero(s.clocks.len());
        s
    }

    fn absolute_ever_needed(&self) -> bool {
        self.plan.generators.iter().any(|g| {
            matches!(
                g.generator.kind,
                GeneratorKind::Periodic { .. }
                    | GeneratorKind::Jitter { .. }
                    | GeneratorKind::BiboundedVariability { .. }
            )
        })
    }

    fn absolute_needed(&self, rt: &Runtime) -> bool {
        self.plan.generators.iter().enumerate().any(|(g, gp)| {
            rt.has_pending_arrival(&self.plan, g)
                && match gp.generator.kind {
                    GeneratorKind::Periodic { .. } | GeneratorKind::Jitter { .. } => true,
                    GeneratorKind::BiboundedVariability { min, .. } => rt.emitted[g] < min,
                    _ => false,
                }
        })
    }

    fn age_needed(&self, g: usize, i: u32, next: u32) -> bool {
        let n = self.plan.generators[g].count;
        let refs = |d: u32| i + d >= next && i + d <= n;
        match self.plan.generators[g].generator.kind {
            GeneratorKind::BoundedVariability { max, .. } => refs(max),
            GeneratorKind::BiboundedVariability { min, max, .. } => refs(max) || refs(min),
            _ => false,
        }
    }

    /// Guard and invariant of the next arrival of generator `g`.
    fn arrival_constraints(&self, rt: &Runtime, g: usize) -> (Vec<Constraint>, Vec<Constraint>) {
        let gp = &self.plan.generators[g];
        let k = rt.emitted[g] + 1;
        let n = gp.count;
        let gc = ClockOwner::Generator(g as u16);
        let age = |i: u32| ClockOwner::ArrivalAge(g as u16, i);
        let grid = |d: Time| Time::from_ticks(d.ticks() * (k as i64 - 1));
        let t = ClockOwner::Absolute;
        match gp.generator.kind {
            GeneratorKind::Periodic { period } => {
                let at = grid(period);
                (vec![at_least(t, at), at_most(t, at)], vec![at_most(t, at)])
            }
            GeneratorKind::Jitter { period, jitter } => {
                let lo = grid(period);
                (vec![at_least(t, lo), at_most(t, lo + jitter)], vec![at_most(t, lo + jitter)])
            }
            GeneratorKind::Uncertain { period, jitter } => {
                let lo = if k == 1 { Time::ZERO } else { period };
                (vec![at_least(gc, lo), at_most(gc, lo + jitter)], vec![at_most(gc, lo + jitter)])
            }
            GeneratorKind::BoundedVariability { window, max } => {
                let guard = if k > max { vec![above(age(k - max), window)] } else { vec![] };
                (guard, vec![])
            }
            GeneratorKind::BiboundedVariability { window, min, max } => {
                let mut guard = if k > max { vec![above(age(k - max), window)] } else { vec![] };
                let lower = if k > min {
                    at_most(age(k - min), window)
                } else if n < min {
                    below(t, window)
                } else {
                    at_most(t, window)
                };
                guard.push(lower);
                (guard, vec![lower])
            }
        }
    }

    fn invariants(&self, s: &SymState) -> Vec<Constraint> {
        let mut out = Vec::new();
        for (r, t) in s.rt.running() {
            let exec = self.plan.task(t.job, t.task).exec[r].expect("running on a supported resource");
            out.push(at_most(ClockOwner::Task(t), exec.duration.hi));
        }
        for g in 0..self.plan.generators.len() {
            if s.rt.has_pending_arrival(&self.plan, g) {
                out.extend(self.arrival_constraints(&s.rt, g).1);
            }
        }
        out
    }

    pub fn is_urgent(&self, s: &SymState) -> bool {
        s.rt.sched.can_dispatch(&self.plan)
    }

    /// All successors of `s`: the dispatch successor if `s` is urgent, and
    /// one successor per enabled end or arrival.
    pub fn successors(&self, s: &SymState) -> Result<Vec<SymState>, ReachError> {
        let e = self.expand(s, usize::MAX)?;
        Ok(e.same_level.into_iter().chain(e.next_level).collect())
    }

    fn expand(&self, s: &SymState, budget: usize) -> Result<Expansion, ReachError> {
        let mut out = Expansion::default();
        if s.rt.is_done(&self.plan) {
            out.is_final = true;
            out.makespan = Some(self.makespan_of(s)?);
            return Ok(out);
        }
        let base = if self.is_urgent(s) {
            let mut d = s.clone();
            for dispatch in d.rt.dispatch_all(&self.plan) {
                d.start_clock(ClockOwner::Task(dispatch.task))?;
            }
            if d.apply(&self.invariants(&d))? {
                check_budget(&d, budget)?;
                out.same_level.push(d);
            }
            s.clone()
        } else {
            let mut z = s.clone();
            z.zone.up()?;
            if !z.apply(&self.invariants(&z))? {
                return Ok(out);
            }
            z
        };

        for (r, t) in base.rt.running() {
            let exec = self.plan.task(t.job, t.task).exec[r].expect("running on a supported resource");
            let mut n = base.clone();
            let c = ClockOwner::Task(t);
            if !n.apply(&[at_least(c, exec.duration.lo), at_most(c, exec.duration.hi)])? {
                continue;
            }
            let (_, done) = n.rt.finish(&self.plan, t);
            if self.purging {
                n.drop_clock(c);
            }
            if self.needs_last_end {
                n.start_clock(ClockOwner::LastEnd)?;
            }
            if let Some(done) = done {
                let resp = ClockOwner::Response(done.seq);
                out.latencies.push((done.gen, done.k, n.bounds_of(resp)?));
                if self.purging {
                    n.drop_clock(resp);
                }
            }
            if n.apply(&self.invariants(&n))? {
                check_budget(&n, budget)?;
                out.next_level.push(n);
            }
        }

        for g in 0..self.plan.generators.len() {
            if !base.rt.has_pending_arrival(&self.plan, g) {
                continue;
            }
            let mut n = base.clone();
            if !n.apply(&self.arrival_constraints(&n.rt, g).0)? {
                continue;
            }
            let first = n.rt.total_emitted() == 0;
            let arrival = n.rt.arrive(&self.plan, g);
            let k = match arrival {
                Arrival::Admitted { seq, k } => {
                    n.start_clock(ClockOwner::Response(seq))?;
                    k
                }
                Arrival::Dropped { k } => {
                    out.overflow = true;
                    k
                }
            };
            if first {
                n.start_clock(ClockOwner::SinceFirst)?;
            }
            self.update_generator_clocks(&mut n, g, k)?;
            if n.apply(&self.invariants(&n))? {
                check_budget(&n, budget)?;
                out.next_level.push(n);
            }
        }
        if self.symmetry {
            for s in out.same_level.iter_mut().chain(&mut out.next_level) {
                self.canonicalize(s);
            }
        }
        Ok(out)
    }

    /// Renames interchangeable tasks and processors to a canonical order.
    /// Within a task class, members are ordered final, blocked, queued by
    /// queue position, then running by the bounds of their clock. Processors
    /// of a class are ordered busy by task, then free.
    fn canonicalize(&self, s: &mut SymState) {
        let sym = &self.plan.symmetry;
        let order: HashMap<TaskRef, usize> =
            s.rt.sched.queued().into_iter().flatten().enumerate().map(|(i, t)| (t, i)).collect();
        let mut maps: Vec<(u32, Vec<u16>)> = Vec::new();
        for inst in &s.rt.instances {
            let classes = &sym.task_classes[inst.job as usize];
            if classes.is_empty() {
                continue;
            }
            let mut map: Vec<u16> = (0..inst.tasks.len() as u16).collect();
            for class in classes {
                let key = |&t: &u16| {
                    let r = TaskRef { seq: inst.seq, job: inst.job, task: t };
                    match inst.tasks[t as usize] {
                        TaskStatus::Final => (0, 0, 0, 0),
                        TaskStatus::Blocked(n) => (1, n as i64, 0, 0),
                        TaskStatus::Queued => (2, order.get(&r).map_or(0, |&i| i as i64), 0, 0),
                        TaskStatus::Running(res) => {
                            let c = s.pos(ClockOwner::Task(r)).expect("running task has a clock");
                            (3, s.zone.get(c, 0).raw(), s.zone.get(0, c).raw(), res as i64)
                        }
                    }
                };
                let mut members = class.clone();
                members.sort_by_key(key);
                for (slot, &t) in class.iter().zip(&members) {
                    map[t as usize] = *slot;
                }
            }
            if map.iter().enumerate().any(|(i, &t)| i != t as usize) {
                maps.push((inst.seq, map));
            }
        }
        let rename = |t: TaskRef| match maps.iter().find(|(seq, _)| *seq == t.seq) {
            Some((_, m)) => TaskRef { task: m[t.task as usize], ..t },
            None => t,
        };

        let busy = s.rt.sched.occupancy();
        let mut processor: Vec<usize> = (0..self.plan.processors).collect();
        for class in &sym.processor_classes {
            let mut members = class.clone();
            members.sort_by_key(|&r| match busy[r] {
                Some(t) => (0, Some(rename(t)), r),
                None => (1, None, r),
            });
            for (slot, &r) in class.iter().zip(&members) {
                processor[r] = *slot;
            }
        }
        let moves = processor.iter().enumerate().any(|(i, &r)| i != r);
        if maps.is_empty() && !moves {
            return;
        }

        s.rt.relabel(&maps, &processor);
        if maps.is_empty() {
            return;
        }
        let mut renamed: Vec<(ClockOwner, usize)> = s
            .clocks
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                ClockOwner::Task(t) => (ClockOwner::Task(rename(t)), i + 1),
                other => (other, i + 1),
            })
            .collect();
        renamed.sort();
        let order: Vec<usize> = renamed.iter().map(|&(_, i)| i).collect();
        if order.iter().enumerate().any(|(i, &o)| o != i + 1) {
            s.zone = s.zone.permute(&order);
        }
        s.clocks = renamed.into_iter().map(|(c, _)| c).collect();
    }

    fn update_generator_clocks(&self, n: &mut SymState, g: usize, k: u32) -> Result<(), ZoneError> {
        let gid = g as u16;
        let pending = n.rt.has_pending_arrival(&self.plan, g);
        match self.plan.generators[g].generator.kind {
            GeneratorKind::Uncertain { .. } => {
                if pending || !self.purging {
                    n.start_clock(ClockOwner::Generator(gid))?;
                } else {
                    n.drop_clock(ClockOwner::Generator(gid));
                }
            }
            GeneratorKind::BoundedVariability { .. } | GeneratorKind::BiboundedVariability { .. } => {
                if !self.purging || self.age_needed(g, k, k + 1) {
                    n.start_clock(ClockOwner::ArrivalAge(gid, k))?;
                }
                if self.purging {
                    let stale: Vec<ClockOwner> = n
                        .clocks
                        .iter()
                        .copied()
                        .filter(
                            |c| matches!(*c, ClockOwner::ArrivalAge(h, i) if h == gid && !self.age_needed(g, i, k + 1)),
                        )
                        .collect();
                    for c in stale {
                        n.drop_clock(c);
                    }
                }
            }
            _ => {}
        }
        if self.purging && !self.absolute_needed(&n.rt) {
            n.drop_clock(ClockOwner::Absolute);
        }
        Ok(())
    }

    fn makespan_of(&self, s: &SymState) -> Result<TimeInterval, ZoneError> {
        let first = s.pos(ClockOwner::SinceFirst).expect("a final state has seen an arrival");
        match s.pos(ClockOwner::LastEnd) {
            Some(last) => s.zone.difference_bounds(first, last),
            None => s.zone.clock_bounds(first),
        }
    }

    fn describe(&self, s: &SymState) -> String {
        let mut out = String::new();
        for inst in &s.rt.instances {
            let _ = write!(out, "{}#{}[", self.plan.jobs[inst.job as usize].name, inst.k);
            for (i, st) in inst.tasks.iter().enumerate() {
                let code = match st {
                    TaskStatus::Blocked(_) => "-".to_string(),
                    TaskStatus::Queued => "q".to_string(),
                    TaskStatus::Running(r) => format!("r{r}"),
                    TaskStatus::Final => "f".to_string(),
                };
                let sep = if i == 0 { "" } else { " " };
                let _ = write!(out, "{sep}{code}");
            }
            out.push_str("] ");
        }
        let _ = write!(out, "emitted={:?} |", s.rt.emitted);
        for (i, c) in s.clocks.iter().enumerate() {
            if let Ok(b) = s.zone.clock_bounds(i + 1) {
                let _ = write!(out, " {}={}", clock_name(&self.plan, *c), b);
            }
        }
        out
    }
}

fn clock_name(plan: &Plan, c: ClockOwner) -> String {
    match c {
        ClockOwner::Absolute => "T".into(),
        ClockOwner::SinceFirst => "S".into(),
        ClockOwner::LastEnd => "E".into(),
        ClockOwner::Generator(g) => format!("g{g}"),
        ClockOwner::ArrivalAge(g, k) => format!("a{g}.{k}"),
        ClockOwner::Response(seq) => format!("resp{seq}"),
        ClockOwner::Task(t) => format!("{}@{}", plan.task(t.job, t.task).id, t.seq),
    }
}

fn check_budget(s: &SymState, budget: usize) -> Result<(), ReachError> {
    if s.clocks.len() > budget {
        return Err(ReachError::BudgetExceeded { required: s.clocks.len(), budget });
    }
    Ok(())
}

/// Visited store of one level: insertion-ordered states, indexed by
/// discrete part.
struct Level {
    states: Vec<Option<SymState>>,
    index: HashMap<(Runtime, Vec<ClockOwner>), Vec<usize>>,
    pruning: bool,
    pruned: usize,
}

impl Level {
    fn new(pruning: bool) -> Self {
        Self { states: Vec::new(), index: HashMap::new(), pruning, pruned: 0 }
    }

    fn insert(&mut self, s: SymState) -> Result<(), ZoneError> {
        let key = (s.rt.clone(), s.clocks.clone());
        let slots = self.index.entry(key).or_default();
        let mut keep = Vec::with_capacity(slots.len() + 1);
        for &i in slots.iter() {
            let old = self.states[i].as_ref().expect("indexed state is live");
            let covered = if self.pruning { old.zone.includes(&s.zone)? } else { old.zone == s.zone };
            if covered {
                self.pruned += 1;
                return Ok(());
            }
            if self.pruning && s.zone.includes(&old.zone)? {
                self.states[i] = None;
                self.pruned += 1;
            } else {
                keep.push(i);
            }
        }
        keep.push(self.states.len());
        *slots = keep;
        self.states.push(Some(s));
        Ok(())
    }

    fn live(&self) -> impl Iterator<Item = &SymState> {
        self.states.iter().flatten()
    }

    fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Exact bounds on makespan and per-instance latency over the first `K`
/// instances of every generator.
pub fn reach_bounds(m: &SystemModel) -> Result<ReachResult, ReachError> {
    reach_bounds_with(m, &ReachOptions::default())
}

pub fn reach_bounds_with(m: &SystemModel, opts: &ReachOptions) -> Result<ReachResult, ReachError> {
    let net = build_network(m, opts)?;
    match opts.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|_| ReachError::Zone(ZoneError::InvalidArgument("cannot start worker pool".into())))?;
            pool.install(|| explore(&net, opts))
        }
        None => explore(&net, opts),
    }
}

pub fn explore(net: &Network, opts: &ReachOptions) -> Result<ReachResult, ReachError> {
    let plan = &net.plan;
    let mut latency: Vec<Vec<Option<TimeInterval>>> =
        plan.generators.iter().map(|g| vec![None; g.count as usize]).collect();
    let mut makespan: Option<TimeInterval> = None;
    let mut overflow = false;
    let mut visited = 0usize;
    let mut pruned = 0usize;
    let mut final_states = 0usize;
    let mut max_clocks = 0usize;
    let mut graph = opts.dump_graph.then(Vec::new);

    let mut current = Level::new(opts.pruning);
    current.insert(net.initial_state())?;
    let mut depth = 0usize;
    let budget = opts.clock_budget;

    let mut absorb = |e: Expansion,
                      same: &mut Level,
                      next: &mut Level,
                      makespan: &mut Option<TimeInterval>,
                      latency: &mut Vec<Vec<Option<TimeInterval>>>|
     -> Result<(), ZoneError> {
        overflow |= e.overflow;
        final_states += e.is_final as usize;
        if let Some(ms) = e.makespan {
            *makespan = Some(makespan.map_or(ms, |m| m.hull(&ms)));
        }
        for (g, k, b) in e.latencies {
            let slot = &mut latency[g as usize][k as usize - 1];
            *slot = Some(slot.map_or(b, |m| m.hull(&b)));
        }
        for s in e.same_level {
            same.insert(s)?;
        }
        for s in e.next_level {
            next.insert(s)?;
        }
        Ok(())
    };

    while !current.is_empty() {
        let mut next = Level::new(opts.pruning);
        for urgent_phase in [true, false] {
            let batch: Vec<usize> = current
                .states
                .iter()
                .enumerate()
                .filter_map(|(i, s)| s.as_ref().filter(|s| net.is_urgent(s) == urgent_phase).map(|_| i))
                .collect();
            let expansions: Vec<Result<Expansion, ReachError>> = batch
                .par_iter()
                .with_min_len(4)
                .map(|&i| net.expand(current.states[i].as_ref().expect("live"), budget))
                .collect();
            for e in expansions {
                absorb(e?, &mut current, &mut next, &mut makespan, &mut latency)?;
            }
        }
        for s in current.live() {
            visited += 1;
            max_clocks = max_clocks.max(s.clocks.len());
            if let Some(g) = graph.as_mut() {
                g.push(format!("L{depth} {}", net.describe(s)));
            }
        }
        pruned += current.pruned;
        if visited + next.states.len() > opts.state_cap {
            return Err(ReachError::SearchCapExceeded { cap: opts.state_cap });
        }
        current = next;
        depth += 1;
    }

    let latency = plan
        .generators
        .iter()
        .zip(latency)
        .flat_map(|(g, ls)| {
            let job = plan.jobs[g.job].name.clone();
            ls.into_iter().enumerate().map(move |(i, b)| InstanceLatency {
                job: job.clone(),
                instance: i as u32 + 1,
                bounds: b,
            })
        })
        .collect();
    Ok(ReachResult {
        makespan,
        latency,
        visited,
        pruned,
        final_states,
        overflow_reachable: overflow,
        max_clocks,
        instances: plan.generators.iter().map(|g| g.count).collect(),
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Policy;

    fn iv(lo: f64, hi: f64) -> TimeInterval {
        TimeInterval::units(lo, hi)
    }

    #[test]
    fn chain_and_parallel_bounds() {
        assert_eq!(reach_bounds(&fixtures::chain2()).unwrap().makespan, Some(iv(4.0, 6.0)));
        assert_eq!(reach_bounds(&fixtures::indep2()).unwrap().makespan, Some(iv(2.0, 4.0)));
        assert_eq!(reach_bounds(&fixtures::diamond()).unwrap().makespan, Some(iv(4.0, 8.0)));
    }

    #[test]
    fn two_speed_network_has_guards_per_processor() {
        let net = build_network(&fixtures::two_speed_chain(), &ReachOptions::default()).unwrap();
        assert_eq!(net.automata.len(), 2);
        let t2 = net.automata.iter().find(|a| a.task == "T2").unwrap();
        assert_eq!(t2.locations[0], Location::NotEnabled);
        let guards: Vec<TimeInterval> = t2.guards.iter().map(|g| g.2).collect();
        assert_eq!(guards, vec![iv(2.0, 8.0), iv(1.0, 4.0)]);
        let t1 = net.automata.iter().find(|a| a.task == "T1").unwrap();
        assert_eq!(t1.locations, vec![Location::Waiting, Location::Executing, Location::Final]);
    }

    #[test]
    fn band_network_counts_transfer_automata() {
        let net = build_network(&fixtures::band16(16), &ReachOptions::default()).unwrap();
        assert_eq!(net.automata.len(), 20);
        assert!(net.automata.iter().any(|a| a.task == "split.read"));
        assert!(net.automata.iter().any(|a| a.task == "merge.write"));
    }

    #[test]
    fn single_task_end_window() {
        let mut m = fixtures::chain2();
        m.application.job_types[0].tasks.truncate(1);
        m.application.job_types[0].edges.clear();
        m.deployment.mapping.remove("T2");
        let net = build_network(&m, &ReachOptions::default()).unwrap();
        // arrival, then dispatch, then the end window
        let s0 = net.initial_state();
        let s1 = net.successors(&s0).unwrap();
        assert_eq!(s1.len(), 1);
        let s2 = net.successors(&s1[0]).unwrap();
        assert_eq!(s2.len(), 1);
        assert!(!net.is_urgent(&s2[0]));
        let s3 = net.successors(&s2[0]).unwrap();
        assert_eq!(s3.len(), 1);
        assert_eq!(s3[0].zone.clock_bounds(s3[0].pos(ClockOwner::SinceFirst).unwrap()).unwrap(), iv(1.0, 2.0));
        assert!(net.successors(&s3[0]).unwrap().is_empty());
    }

    #[test]
    fn zero_width_durations_give_one_final_state() {
        let mut m = fixtures::diamond();
        for t in &mut m.application.job_types[0].tasks {
            t.work.hi = t.work.lo;
        }
        let r = reach_bounds(&m).unwrap();
        assert_eq!(r.final_states, 1);
        assert_eq!(r.makespan, Some(iv(4.0, 4.0)));
    }

    #[test]
    fn pruning_purging_and_workers_do_not_change_bounds() {
        for m in [fixtures::diamond(), fixtures::stream3(), fixtures::strict_pair()] {
            let base = reach_bounds(&m).unwrap();
            let variants = [
                ReachOptions { pruning: false, ..Default::default() },
                ReachOptions { purging: false, ..Default::default() },
                ReachOptions { workers: Some(1), ..Default::default() },
                ReachOptions { workers: Some(3), ..Default::default() },
            ];
            for o in variants {
                let r = reach_bounds_with(&m, &o).unwrap();
                assert_eq!(r.makespan, base.makespan, "{} {o:?}", m.name);
                assert_eq!(r.latency, base.latency, "{} {o:?}", m.name);
            }
        }
    }

    #[test]
    fn symmetry_reduction_is_exact() {
        let models = [
            fixtures::diamond(),
            fixtures::indep2(),
            fixtures::stream3(),
            fixtures::band16(2),
            fixtures::band16(4),
            fixtures::mapping_stream(Policy::FifoGlobal, 7000.0, 2),
        ];
        for m in models {
            let on = reach_bounds(&m).unwrap();
            let off = reach_bounds_with(&m, &ReachOptions { symmetry: false, ..Default::default() }).unwrap();
            assert_eq!(on.makespan, off.makespan, "{}", m.name);
            assert_eq!(on.latency, off.latency, "{}", m.name);
            assert_eq!(on.overflow_reachable, off.overflow_reachable, "{}", m.name);
            assert!(on.visited <= off.visited, "{}", m.name);
        }
    }

    #[test]
    fn symmetry_classes_of_a_band() {
        let plan = Plan::compile(&fixtures::band16(4), None).unwrap();
        assert_eq!(plan.symmetry.processor_classes, vec![vec![0, 1, 2, 3]]);
        assert!(plan.symmetry.task_classes[0].iter().any(|c| c.len() >= 2));
        let strict = Plan::compile(&fixtures::strict_pair(), None).unwrap();
        assert!(strict.symmetry.is_trivial());
    }

    #[test]
    fn budget_is_enforced_statically() {
        let opts = ReachOptions { clock_budget: 3, ..Default::default() };
        assert!(matches!(
            reach_bounds_with(&fixtures::band16(4), &opts),
            Err(ReachError::BudgetExceeded { budget: 3, .. })
        ));
    }

    #[test]
    fn search_cap_is_enforced() {
        let opts = ReachOptions { state_cap: 5, ..Default::default() };
        assert_eq!(reach_bounds_with(&fixtures::diamond(), &opts), Err(ReachError::SearchCapExceeded { cap: 5 }));
    }

    #[test]
    fn graph_dump_is_stable() {
        let opts = ReachOptions { dump_graph: true, ..Default::default() };
        let a = reach_bounds_with(&fixtures::chain2(), &opts).unwrap().graph.unwrap();
        let b =
            reach_bounds_with(&fixtures::chain2(), &ReachOptions { workers: Some(2), ..opts }).unwrap().graph.unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], "L0 emitted=[0] | T=[0.000000, 0.000000]");
    }

    #[test]
    fn fixed_mapping_single_instance_worst_case() {
        let r = reach_bounds(&fixtures::mapping_stream(Policy::FifoLocal, 7000.0, 1)).unwrap();
        let lat = r.latency[0].bounds.unwrap();
        assert_eq!(lat.hi, Time::from_units(8400));
        assert_eq!(lat.lo, Time::from_units(600));
    }

    #[test]
    fn overflow_is_reported_and_drops_continue() {
        let mut m = fixtures::chain2();
        m.generators[0].kind = GeneratorKind::Periodic { period: Time::from_units(3) };
        m.generators[0].count = 3;
        m.instance_bound = 3;
        let r = reach_bounds(&m).unwrap();
        assert!(r.overflow_reachable);
        assert!(r.latency[0].bounds.is_some());
    }
}
