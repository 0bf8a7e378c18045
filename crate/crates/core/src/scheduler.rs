//! Deployment policies.
//!
//! The scheduler is a deterministic function of the events fed to it. Both
//! engines drive the same [`SchedulerState`], which is also part of the
//! discrete state of the formal search.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::Policy;
use crate::plan::Plan;
use crate::time::Freq;

/// A task of one live job instance. Ordered by instance sequence number,
/// then task index, which is the enqueue order for simultaneous enablings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskRef {
    pub seq: u32,
    pub job: u16,
    pub task: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dispatch {
    pub task: TaskRef,
    pub resource: usize,
    pub freq: Freq,
}

type StrictKey = (u32, Reverse<i64>, TaskRef);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Queues {
    Fifo(VecDeque<TaskRef>),
    Priority(BTreeMap<Reverse<i64>, VecDeque<TaskRef>>),
    Local(Vec<VecDeque<TaskRef>>),
    /// Per processor: every unstarted task of a live instance mapped there,
    /// plus the subset already enabled.
    Strict {
        pending: Vec<BTreeSet<StrictKey>>,
        enabled: BTreeSet<TaskRef>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchedulerState {
    queues: Queues,
    /// One FIFO per interconnect.
    links: Vec<VecDeque<TaskRef>>,
    busy: Vec<Option<TaskRef>>,
    backlog: u32,
}

impl SchedulerState {
    pub fn new(plan: &Plan) -> Self {
        let pes = plan.processors;
        let queues = match plan.policy {
            Policy::FifoGlobal => Queues::Fifo(VecDeque::new()),
            Policy::FifoPriorityGlobal => Queues::Priority(BTreeMap::new()),
            Policy::FifoLocal => Queues::Local(vec![VecDeque::new(); pes]),
            Policy::StrictPriorityLocal => {
                Queues::Strict { pending: vec![BTreeSet::new(); pes], enabled: BTreeSet::new() }
            }
        };
        Self {
            queues,
            links: vec![VecDeque::new(); plan.resources.len() - pes],
            busy: vec![None; plan.resources.len()],
            backlog: 0,
        }
    }

    /// Number of live job instances.
    pub fn backlog(&self) -> u32 {
        self.backlog
    }

    /// Accepts a new job instance unless the backlog is full.
    pub fn admit(&mut self, plan: &Plan, seq: u32, job: u16) -> bool {
        if self.backlog >= plan.queue_capacity {
            return false;
        }
        self.backlog += 1;
        if let Queues::Strict { pending, .. } = &mut self.queues {
            for (i, t) in plan.jobs[job as usize].tasks.iter().enumerate() {
                if let (false, Some(pe)) = (t.is_comm, t.home) {
                    let r = TaskRef { seq, job, task: i as u16 };
                    pending[pe].insert((seq, Reverse(t.priority), r));
                }
            }
        }
        true
    }

    /// Forgets a completed job instance.
    pub fn retire(&mut self) {
        debug_assert!(self.backlog > 0);
        self.backlog -= 1;
    }

    /// Queues a task whose predecessors have all completed.
    pub fn on_enabled(&mut self, plan: &Plan, t: TaskRef) {
        let tp = plan.task(t.job, t.task);
        if tp.is_comm {
            let link = tp.home.expect("communication task without interconnect") - plan.processors;
            self.links[link].push_back(t);
            return;
        }
        match &mut self.queues {
            Queues::Fifo(q) => q.push_back(t),
            Queues::Priority(levels) => levels.entry(Reverse(tp.priority)).or_default().push_back(t),
            Queues::Local(qs) => qs[tp.home.expect("unmapped task under a local policy")].push_back(t),
            Queues::Strict { enabled, .. } => {
                enabled.insert(t);
            }
        }
    }

    pub fn is_free(&self, resource: usize) -> bool {
        self.busy[resource].is_none()
    }

    /// Task occupying each resource.
    pub fn occupancy(&self) -> &[Option<TaskRef>] {
        &self.busy
    }

    /// The task `resource` would take now, without taking it.
    pub fn peek(&self, plan: &Plan, resource: usize) -> Option<TaskRef> {
        if !self.is_free(resource) {
            return None;
        }
        if resource >= plan.processors {
            return self.links[resource - plan.processors].front().copied();
        }
        match &self.queues {
            Queues::Fifo(q) => q.iter().copied().find(|t| runs_on(plan, *t, resource)),
            Queues::Priority(levels) => {
                levels.values().find_map(|q| q.iter().copied().find(|t| runs_on(plan, *t, resource)))
            }
            Queues::Local(qs) => qs[resource].front().copied(),
            Queues::Strict { pending, enabled } => {
                let &(_, _, top) = pending[resource].first()?;
                enabled.contains(&top).then_some(top)
            }
        }
    }

    /// Picks the next task for the free `resource`, marking it busy.
    pub fn dispatch(&mut self, plan: &Plan, resource: usize) -> Option<Dispatch> {
        let t = self.peek(plan, resource)?;
        if resource >= plan.processors {
            self.links[resource - plan.processors].pop_front();
        } else {
            match &mut self.queues {
                Queues::Fifo(q) => remove_first(q, t),
                Queues::Priority(levels) => {
                    let key = Reverse(plan.task(t.job, t.task).priority);
                    let q = levels.get_mut(&key).expect("queued level");
                    remove_first(q, t);
                    if q.is_empty() {
                        levels.remove(&key);
                    }
                }
                Queues::Local(qs) => {
                    qs[resource].pop_front();
                }
                Queues::Strict { pending, enabled } => {
                    pending[resource].pop_first();
                    enabled.remove(&t);
                }
            }
        }
        self.busy[resource] = Some(t);
        let exec = plan.task(t.job, t.task).exec[resource].expect("dispatch to an unsupported resource");
        Some(Dispatch { task: t, resource, freq: exec.freq })
    }

    /// Dispatches until no free resource can take a task; resources are
    /// considered in ascending index order.
    pub fn dispatch_all(&mut self, plan: &Plan) -> Vec<Dispatch> {
        (0..self.busy.len()).filter_map(|r| self.dispatch(plan, r)).collect()
    }

    /// Whether some dispatch would fire now.
    pub fn can_dispatch(&self, plan: &Plan) -> bool {
        (0..self.busy.len()).any(|r| self.peek(plan, r).is_some())
    }

    /// Frees `resource`, returning the task that held it.
    pub fn release(&mut self, resource: usize) -> Option<TaskRef> {
        self.busy[resource].take()
    }

    /// Queued tasks in dequeue order per queue, for diagnostics.
    pub fn queued(&self) -> Vec<Vec<TaskRef>> {
        let mut out: Vec<Vec<TaskRef>> = match &self.queues {
            Queues::Fifo(q) => vec![q.iter().copied().collect()],
            Queues::Priority(levels) => levels.values().map(|q| q.iter().copied().collect()).collect(),
            Queues::Local(qs) => qs.iter().map(|q| q.iter().copied().collect()).collect(),
            Queues::Strict { enabled, .. } => vec![enabled.iter().copied().collect()],
        };
        out.extend(self.links.iter().map(|q| q.iter().copied().collect()));
        out
    }

    /// Renames tasks by `task` and moves processor `r` to `processor[r]`.
    /// Queue order is kept.
    pub(crate) fn relabel(&mut self, task: impl Fn(TaskRef) -> TaskRef, processor: &[usize]) {
        let deque = |q: &mut VecDeque<TaskRef>| q.iter_mut().for_each(|t| *t = task(*t));
        match &mut self.queues {
            Queues::Fifo(q) => deque(q),
            Queues::Priority(levels) => levels.values_mut().for_each(deque),
            Queues::Local(qs) => {
                qs.iter_mut().for_each(deque);
                let old = std::mem::take(qs);
                *qs = permuted(old, processor);
            }
            Queues::Strict { pending, enabled } => {
                for p in pending.iter_mut() {
                    *p = p.iter().map(|&(s, pr, t)| (s, pr, task(t))).collect();
                }
                *enabled = enabled.iter().map(|&t| task(t)).collect();
                let old = std::mem::take(pending);
                *pending = permuted(old, processor);
            }
        }
        self.links.iter_mut().for_each(deque);
        let pes = processor.len();
        let mut busy: Vec<Option<TaskRef>> = self.busy.iter().map(|b| b.map(&task)).collect();
        let moved = permuted(busy.drain(..pes).collect(), processor);
        busy.splice(0..0, moved);
        self.busy = busy;
    }
}

/// Moves `v[r]` to position `to[r]`.
fn permuted<T: Default>(mut v: Vec<T>, to: &[usize]) -> Vec<T> {
    let mut out: Vec<T> = (0..v.len()).map(|_| T::default()).collect();
    for (r, x) in v.drain(..).enumerate() {
        out[to[r]] = x;
    }
    out
}

fn runs_on(plan: &Plan, t: TaskRef, resource: usize) -> bool {
    plan.task(t.job, t.task).exec[resource].is_some()
}

fn remove_first(q: &mut VecDeque<TaskRef>, t: TaskRef) {
    if let Some(i) = q.iter().position(|x| *x == t) {
        q.remove(i);
    }
}
