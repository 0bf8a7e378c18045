//! Compiled form of a [`SystemModel`] shared by both engines.
//!
//! Compilation validates the model, inserts communication tasks, sorts each
//! job's tasks by id and resolves every task to the resources it may run on
//! together with the frequency and duration interval it would get there.

use std::collections::HashMap;

use crate::generators::Generator;
use crate::model::{
    duration_interval, expand_comm_tasks, validate_model, ModelError, Policy, SystemModel, TaskKind, TimeInterval,
    Violation,
};
use crate::time::{Freq, Time};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("invalid model: {}", list(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("job type `{0}` has more than 65535 tasks")]
    TooLarge(String),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceKind {
    Processor,
    Interconnect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    pub id: String,
    pub kind: ResourceKind,
    /// Frequency a processor runs at before its first task.
    pub initial_freq: Freq,
}

/// How a task executes on one resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exec {
    pub freq: Freq,
    pub duration: TimeInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskPlan {
    pub id: String,
    pub is_comm: bool,
    pub preds: Vec<u16>,
    pub succs: Vec<u16>,
    pub priority: i64,
    /// The only resource the task may use, if it is pinned.
    pub home: Option<usize>,
    /// Indexed by resource; `None` where the task cannot run.
    pub exec: Vec<Option<Exec>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobPlan {
    pub name: String,
    pub tasks: Vec<TaskPlan>,
}

impl JobPlan {
    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.binary_search_by(|t| t.id.as_str().cmp(id)).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenPlan {
    pub job: usize,
    pub generator: Generator,
    /// Instances this plan emits; the generator count, possibly truncated.
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub name: String,
    pub policy: Policy,
    pub queue_capacity: u32,
    /// Active processors in declaration order, then interconnects.
    pub resources: Vec<Resource>,
    pub processors: usize,
    pub jobs: Vec<JobPlan>,
    pub generators: Vec<GenPlan>,
    pub symmetry: Symmetry,
}

/// Interchangeable tasks and processors. Renaming members of a class maps
/// every behavior to a behavior with the same timing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Symmetry {
    /// Per job: classes of two or more tasks, members ascending.
    pub task_classes: Vec<Vec<Vec<u16>>>,
    /// Classes of two or more processors, members ascending.
    pub processor_classes: Vec<Vec<usize>>,
}

impl Symmetry {
    fn of(policy: Policy, resources: &[Resource], processors: usize, jobs: &[JobPlan]) -> Self {
        // Strict priority breaks ties between equal priorities by task index,
        // so no two tasks are interchangeable under it.
        let task_classes = jobs
            .iter()
            .map(|j| {
                if policy == Policy::StrictPriorityLocal {
                    return Vec::new();
                }
                let same = |a: &TaskPlan, b: &TaskPlan| {
                    a.is_comm == b.is_comm
                        && a.preds == b.preds
                        && a.succs == b.succs
                        && a.priority == b.priority
                        && a.home == b.home
                        && a.exec == b.exec
                };
                classes(j.tasks.len(), |a, b| same(&j.tasks[a], &j.tasks[b]))
                    .into_iter()
                    .map(|c| c.into_iter().map(|t| t as u16).collect())
                    .collect()
            })
            .collect();
        let processor_classes = if policy.is_local() {
            Vec::new()
        } else {
            classes(processors, |a, b| {
                resources[a].initial_freq == resources[b].initial_freq
                    && jobs.iter().flat_map(|j| &j.tasks).all(|t| t.exec[a] == t.exec[b])
            })
        };
        Self { task_classes, processor_classes }
    }

    pub fn is_trivial(&self) -> bool {
        self.processor_classes.is_empty() && self.task_classes.iter().all(Vec::is_empty)
    }
}

/// Groups `0..n` by `same`, keeping groups of two or more.
fn classes(n: usize, same: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match out.iter_mut().find(|c| same(c[0], i)) {
            Some(c) => c.push(i),
            None => out.push(vec![i]),
        }
    }
    out.retain(|c| c.len() > 1);
    out
}

impl Plan {
    /// Compiles `m`; `instance_limit` truncates every generator.
    pub fn compile(m: &SystemModel, instance_limit: Option<u32>) -> Result<Plan, PlanError> {
        let violations = validate_model(m);
        if !violations.is_empty() {
            return Err(PlanError::Invalid(violations));
        }
        let d = &m.deployment;
        let p = &m.platform;
        let mut resources: Vec<Resource> = p
            .active_processors()
            .map(|pr| Resource {
                id: pr.id.clone(),
                kind: ResourceKind::Processor,
                initial_freq: pr.default_frequency().unwrap_or(Freq::ZERO),
            })
            .collect();
        let processors = resources.len();
        resources.extend(p.interconnects.iter().map(|ic| Resource {
            id: ic.id.clone(),
            kind: ResourceKind::Interconnect,
            initial_freq: unit_freq(),
        }));
        let index: HashMap<&str, usize> = resources.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();

        let mut jobs = Vec::new();
        for j in &m.application.job_types {
            let mut expanded = expand_comm_tasks(j, d, p)?;
            if expanded.tasks.len() > u16::MAX as usize {
                return Err(PlanError::TooLarge(j.name.clone()));
            }
            expanded.tasks.sort_by(|a, b| a.id.cmp(&b.id));
            let pos: HashMap<&str, u16> =
                expanded.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i as u16)).collect();
            let mut tasks = Vec::with_capacity(expanded.tasks.len());
            for t in &expanded.tasks {
                let mut exec = vec![None; resources.len()];
                let home;
                match &t.kind {
                    TaskKind::Communication { interconnect } => {
                        let r = index[interconnect.as_str()];
                        exec[r] = Some(Exec {
                            freq: unit_freq(),
                            duration: TimeInterval {
                                lo: Time::from_ticks(t.work.lo.ticks()),
                                hi: Time::from_ticks(t.work.hi.ticks()),
                            },
                        });
                        home = Some(r);
                    }
                    TaskKind::Computation => {
                        home =
                            if d.policy.is_local() { d.mapping.get(&t.id).map(|id| index[id.as_str()]) } else { None };
                        for (r, pr) in p.active_processors().enumerate() {
                            if home.is_some_and(|h| h != r) {
                                continue;
                            }
                            let freq = d.task_frequency.get(&t.id).copied().unwrap_or(resources[r].initial_freq);
                            if !pr.frequencies.contains(&freq) {
                                continue;
                            }
                            exec[r] = Some(Exec { freq, duration: duration_interval(t.work, freq)? });
                        }
                    }
                }
                tasks.push(TaskPlan {
                    id: t.id.clone(),
                    is_comm: !t.kind.is_computation(),
                    preds: Vec::new(),
                    succs: Vec::new(),
                    priority: d.priorities.get(&t.id).copied().unwrap_or(0),
                    home,
                    exec,
                });
            }
            for e in &expanded.edges {
                let (a, b) = (pos[e.from.as_str()], pos[e.to.as_str()]);
                tasks[a as usize].succs.push(b);
                tasks[b as usize].preds.push(a);
            }
            for t in &mut tasks {
                t.succs.sort_unstable();
                t.succs.dedup();
                t.preds.sort_unstable();
                t.preds.dedup();
            }
            jobs.push(JobPlan { name: j.name.clone(), tasks });
        }

        let generators = m
            .generators
            .iter()
            .map(|g| GenPlan {
                job: m.application.job_types.iter().position(|j| j.name == g.job_type).unwrap_or(0),
                generator: g.clone(),
                count: instance_limit.map_or(g.count, |k| g.count.min(k)),
            })
            .collect();

        Ok(Plan {
            name: m.name.clone(),
            policy: d.policy,
            queue_capacity: d.queue_capacity,
            symmetry: Symmetry::of(d.policy, &resources, processors, &jobs),
            resources,
            processors,
            jobs,
            generators,
        })
    }

    pub fn task(&self, job: u16, task: u16) -> &TaskPlan {
        &self.jobs[job as usize].tasks[task as usize]
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.resources.iter().position(|r| r.id == id)
    }

    pub fn interconnects(&self) -> std::ops::Range<usize> {
        self.processors..self.resources.len()
    }

    pub fn total_instances(&self) -> u32 {
        self.generators.iter().map(|g| g.count).sum()
    }
}

pub(crate) fn unit_freq() -> Freq {
    Freq::from_units(1)
}
