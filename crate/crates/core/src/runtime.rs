//! Discrete semantics shared by the simulator and the formal engine: job
//! instances, task status, admission and dispatching. Time is not tracked
//! here; each engine decides when events happen.

use crate::plan::Plan;
use crate::scheduler::{Dispatch, SchedulerState, TaskRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskStatus {
    /// Waiting for this many predecessors.
    Blocked(u16),
    Queued,
    Running(u16),
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    pub seq: u32,
    pub gen: u16,
    /// 1-based index within its generator.
    pub k: u32,
    pub job: u16,
    pub tasks: Vec<TaskStatus>,
    pub remaining: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrival {
    Admitted { seq: u32, k: u32 },
    Dropped { k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Completion {
    pub seq: u32,
    pub gen: u16,
    pub k: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Runtime {
    /// Live instances, ordered by `seq`.
    pub instances: Vec<Instance>,
    pub sched: SchedulerState,
    /// Arrivals emitted so far, per generator.
    pub emitted: Vec<u32>,
    pub next_seq: u32,
}

impl Runtime {
    pub fn new(plan: &Plan) -> Self {
        Self {
            instances: Vec::new(),
            sched: SchedulerState::new(plan),
            emitted: vec![0; plan.generators.len()],
            next_seq: 0,
        }
    }

    pub fn has_pending_arrival(&self, plan: &Plan, gen: usize) -> bool {
        self.emitted[gen] < plan.generators[gen].count
    }

    pub fn total_emitted(&self) -> u32 {
        self.emitted.iter().sum()
    }

    /// All arrivals emitted and every admitted instance completed.
    pub fn is_done(&self, plan: &Plan) -> bool {
        self.instances.is_empty() && (0..plan.generators.len()).all(|g| !self.has_pending_arrival(plan, g))
    }

    pub fn instance(&self, seq: u32) -> Option<&Instance> {
        self.instances.binary_search_by_key(&seq, |i| i.seq).ok().map(|i| &self.instances[i])
    }

    /// Next arrival of generator `gen`; enabled source tasks are queued in
    /// task order.
    pub fn arrive(&mut self, plan: &Plan, gen: usize) -> Arrival {
        debug_assert!(self.has_pending_arrival(plan, gen));
        self.emitted[gen] += 1;
        let k = self.emitted[gen];
        let job = plan.generators[gen].job as u16;
        let seq = self.next_seq;
        if !self.sched.admit(plan, seq, job) {
            return Arrival::Dropped { k };
        }
        self.next_seq += 1;
        let tasks: Vec<TaskStatus> = plan.jobs[job as usize]
            .tasks
            .iter()
            .map(|t| if t.preds.is_empty() { TaskStatus::Queued } else { TaskStatus::Blocked(t.preds.len() as u16) })
            .collect();
        let remaining = tasks.len() as u16;
        for (i, s) in tasks.iter().enumerate() {
            if *s == TaskStatus::Queued {
                self.sched.on_enabled(plan, TaskRef { seq, job, task: i as u16 });
            }
        }
        self.instances.push(Instance { seq, gen: gen as u16, k, job, tasks, remaining });
        Arrival::Admitted { seq, k }
    }

    /// Ends running task `t`: frees its resource and queues newly enabled
    /// successors in task order. Returns the freed resource and, when this
    /// was the instance's last task, its completion.
    pub fn finish(&mut self, plan: &Plan, t: TaskRef) -> (usize, Option<Completion>) {
        let idx = self.instances.binary_search_by_key(&t.seq, |i| i.seq).expect("finish of a dead instance");
        let inst = &mut self.instances[idx];
        let TaskStatus::Running(resource) = inst.tasks[t.task as usize] else {
            panic!("finish of a task that is not running");
        };
        inst.tasks[t.task as usize] = TaskStatus::Final;
        inst.remaining -= 1;
        self.sched.release(resource as usize);
        let mut enabled = Vec::new();
        for &s in &plan.task(t.job, t.task).succs {
            if let TaskStatus::Blocked(n) = &mut inst.tasks[s as usize] {
                *n -= 1;
                if *n == 0 {
                    inst.tasks[s as usize] = TaskStatus::Queued;
                    enabled.push(TaskRef { seq: t.seq, job: t.job, task: s });
                }
            }
        }
        let done = (inst.remaining == 0).then_some(Completion { seq: inst.seq, gen: inst.gen, k: inst.k });
        for e in enabled {
            self.sched.on_enabled(plan, e);
        }
        if done.is_some() {
            self.instances.remove(idx);
            self.sched.retire();
        }
        (resource as usize, done)
    }

    /// Starts every task the scheduler dispatches now.
    pub fn dispatch_all(&mut self, plan: &Plan) -> Vec<Dispatch> {
        let ds = self.sched.dispatch_all(plan);
        for d in &ds {
            let idx = self.instances.binary_search_by_key(&d.task.seq, |i| i.seq).expect("dispatch of a dead instance");
            self.instances[idx].tasks[d.task.task as usize] = TaskStatus::Running(d.resource as u16);
        }
        ds
    }

    /// Moves task `i` of instance `seq` to `m[i]` for each `(seq, m)` in
    /// `maps`, and processor `r` to `processor[r]`.
    pub(crate) fn relabel(&mut self, maps: &[(u32, Vec<u16>)], processor: &[usize]) {
        let lookup = |t: TaskRef| match maps.iter().find(|(s, _)| *s == t.seq) {
            Some((_, m)) => TaskRef { task: m[t.task as usize], ..t },
            None => t,
        };
        self.sched.relabel(lookup, processor);
        let res = |r: u16| processor.get(r as usize).map_or(r, |&p| p as u16);
        for inst in &mut self.instances {
            let m = maps.iter().find(|(s, _)| *s == inst.seq).map(|(_, m)| m);
            let mut out = inst.tasks.clone();
            for (i, st) in inst.tasks.iter().enumerate() {
                let j = m.map_or(i, |m| m[i] as usize);
                out[j] = match *st {
                    TaskStatus::Running(r) => TaskStatus::Running(res(r)),
                    other => other,
                };
            }
            inst.tasks = out;
        }
    }

    /// Running tasks with their resources, in resource order.
    pub fn running(&self) -> impl Iterator<Item = (usize, TaskRef)> + '_ {
        self.sched.occupancy().iter().enumerate().filter_map(|(r, t)| t.map(|t| (r, t)))
    }
}
