//! Builds a model in code, validates it, and shows how work becomes duration
//! and how cross-processor edges become communication tasks.
//!
//! ```text
//! cargo run --example model_basics
//! ```

use dse::config::{model_hash, to_json};
use dse::model::{
    Application, DataEdge, Deployment, Interconnect, JobType, Platform, Policy, PowerEntry, PowerPair, Processor,
    TaskSpec,
};
use dse::{
    duration_interval, expand_comm_tasks, validate_model, Freq, Generator, GeneratorKind, Rate, SystemModel, Time,
    Volume, WorkInterval,
};

fn pe(id: &str) -> Processor {
    Processor {
        id: id.into(),
        frequencies: vec![Freq::from_units(1), Freq::from_units(2)],
        power: vec![
            PowerEntry { frequency: Freq::from_units(1), static_watts: 0.5, dynamic_watts: 1.0 },
            PowerEntry { frequency: Freq::from_units(2), static_watts: 0.8, dynamic_watts: 3.0 },
        ],
        initially_on: true,
    }
}

fn main() {
    let mut edge = DataEdge::new("produce", "consume");
    edge.volume = Volume::from_units(8);
    edge.interconnect = Some("bus".into());
    let job = JobType {
        name: "J".into(),
        tasks: vec![
            TaskSpec::new("produce", WorkInterval::units(4.0, 6.0)),
            TaskSpec::new("consume", WorkInterval::units(2.0, 2.0)),
        ],
        edges: vec![edge],
    };
    let platform = Platform {
        processors: vec![pe("PE0"), pe("PE1")],
        memories: vec![],
        interconnects: vec![Interconnect {
            id: "bus".into(),
            rate: Rate::from_units(4),
            init_latency: Time::from_units(1),
            power: PowerPair { static_watts: 0.1, dynamic_watts: 0.2 },
        }],
    };
    let mut deployment = Deployment::new(Policy::FifoLocal, 1);
    deployment.mapping =
        [("produce", "PE0"), ("consume", "PE1")].iter().map(|(t, p)| (t.to_string(), p.to_string())).collect();
    deployment.task_frequency.insert("produce".into(), Freq::from_units(2));

    let m = SystemModel {
        name: "producer_consumer".into(),
        application: Application { job_types: vec![job] },
        platform,
        generators: vec![Generator::new("J", 1, GeneratorKind::Periodic { period: Time::from_units(100) })],
        deployment,
        instance_bound: 1,
    };

    let violations = validate_model(&m);
    println!("violations: {}", violations.len());

    let w = WorkInterval::units(4.0, 6.0);
    for f in [1, 2] {
        println!("work [{}, {}] at frequency {f}: {}", w.lo, w.hi, duration_interval(w, Freq::from_units(f)).unwrap());
    }

    let expanded = expand_comm_tasks(&m.application.job_types[0], &m.deployment, &m.platform).unwrap();
    for t in &expanded.tasks {
        println!("task {:<22} {:?}", t.id, t.kind);
    }
    for e in &expanded.edges {
        println!("edge {} -> {}", e.from, e.to);
    }

    println!("model hash {}", model_hash(&m));
    println!("{}", to_json(&m));
}
