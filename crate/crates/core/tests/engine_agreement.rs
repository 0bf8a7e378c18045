//! Random small models: every simulated makespan and latency lies inside the
//! formal bounds, under every policy.

use std::collections::BTreeMap;

use proptest::prelude::*;

use dse::model::{Application, DataEdge, Deployment, JobType, Platform, Policy, PowerEntry, Processor, TaskSpec};
use dse::simulator::{EventKind, Simulator};
use dse::{reach_bounds, Freq, Generator, GeneratorKind, SystemModel, Time, WorkInterval};

fn pe(i: usize) -> Processor {
    Processor {
        id: format!("PE{i}"),
        frequencies: vec![Freq::from_units(1)],
        power: vec![PowerEntry { frequency: Freq::from_units(1), static_watts: 1.0, dynamic_watts: 1.0 }],
        initially_on: true,
    }
}

#[derive(Debug, Clone)]
struct Shape {
    works: Vec<(u8, u8)>,
    edges: Vec<(usize, usize)>,
    pes: usize,
    policy: Policy,
    home: Vec<usize>,
    priority: Vec<i64>,
    count: u32,
    jitter: bool,
    capacity: u32,
}

fn shape() -> impl Strategy<Value = Shape> {
    (2usize..=4, 1usize..=2).prop_flat_map(|(n, pes)| {
        (
            proptest::collection::vec((0u8..=3, 0u8..=3), n),
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2),
            prop_oneof![
                Just(Policy::FifoGlobal),
                Just(Policy::FifoPriorityGlobal),
                Just(Policy::FifoLocal),
                Just(Policy::StrictPriorityLocal)
            ],
            proptest::collection::vec(0..pes, n),
            proptest::collection::vec(0i64..3, n),
            1u32..=2,
            any::<bool>(),
            1u32..=2,
        )
            .prop_map(move |(w, e, policy, home, priority, count, jitter, capacity)| {
                let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
                Shape {
                    works: w.into_iter().map(|(lo, extra)| (1 + lo, 1 + lo + extra)).collect(),
                    edges: pairs.zip(e).filter(|(_, keep)| *keep).map(|(p, _)| p).collect(),
                    pes,
                    policy,
                    home,
                    priority,
                    count,
                    jitter,
                    capacity,
                }
            })
    })
}

fn build(s: &Shape) -> SystemModel {
    let id = |i: usize| format!("t{i}");
    let tasks = s
        .works
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| TaskSpec::new(id(i), WorkInterval::units(lo as f64, hi as f64)));
    let job = JobType {
        name: "J".into(),
        tasks: tasks.collect(),
        edges: s.edges.iter().map(|&(a, b)| DataEdge::new(id(a), id(b))).collect(),
    };
    let mut d = Deployment::new(s.policy, s.capacity);
    if s.policy.is_local() {
        d.mapping = s.home.iter().enumerate().map(|(i, &p)| (id(i), format!("PE{p}"))).collect();
    }
    // Strict priority needs distinct priorities per processor that never put a
    // successor above its predecessor; edges run from lower to higher index.
    let strict = s.policy == Policy::StrictPriorityLocal;
    let n = s.priority.len() as i64;
    d.priorities =
        s.priority.iter().enumerate().map(|(i, &p)| (id(i), if strict { n - i as i64 } else { p })).collect();
    let period = Time::from_units(6);
    let kind = if s.jitter {
        GeneratorKind::Jitter { period, jitter: Time::from_units(2) }
    } else {
        GeneratorKind::Periodic { period }
    };
    SystemModel {
        name: "random".into(),
        application: Application { job_types: vec![job] },
        platform: Platform { processors: (0..s.pes).map(pe).collect(), memories: vec![], interconnects: vec![] },
        generators: vec![Generator::new("J", s.count, kind)],
        deployment: d,
        instance_bound: s.count,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_stays_inside_formal_bounds(s in shape(), seed in 0u64..1000) {
        let m = build(&s);
        prop_assert_eq!(dse::validate_model(&m), vec![]);
        let r = reach_bounds(&m).unwrap();
        let latency: BTreeMap<u32, _> = r.latency.iter().filter_map(|l| l.bounds.map(|b| (l.instance, b))).collect();
        let sim = Simulator::new(&m).unwrap();
        for run in 0..30 {
            let trace = sim.run(seed, run).unwrap();
            let mut arrival = BTreeMap::new();
            let mut end = BTreeMap::new();
            let mut overflow = false;
            for e in &trace.events {
                match &e.kind {
                    EventKind::Arrival { instance, .. } => { arrival.insert(*instance, e.time); }
                    EventKind::End { instance, .. } => { end.insert(*instance, e.time); }
                    EventKind::Overflow { .. } => overflow = true,
                    _ => {}
                }
            }
            prop_assert!(!overflow || r.overflow_reachable);
            let first = *arrival.values().next().unwrap();
            let ms = trace.last_time() - first;
            let bounds = r.makespan.unwrap();
            prop_assert!(bounds.contains(ms), "run {}: makespan {} outside {}", run, ms, bounds);
            for (k, t) in &end {
                let b = latency[k];
                prop_assert!(b.contains(*t - arrival[k]), "run {}: latency {} outside {}", run, *t - arrival[k], b);
            }
        }
    }

    #[test]
    fn symmetry_reduction_keeps_bounds(s in shape()) {
        let m = build(&s);
        let on = reach_bounds(&m).unwrap();
        let off = dse::reachability::reach_bounds_with(&m, &dse::ReachOptions { symmetry: false, ..Default::default() }).unwrap();
        prop_assert_eq!(on.makespan, off.makespan);
        prop_assert_eq!(on.latency, off.latency);
        prop_assert_eq!(on.overflow_reachable, off.overflow_reachable);
    }
}
