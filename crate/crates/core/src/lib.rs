//! Design-space exploration for task graphs deployed on multi-core platforms.
//!
//! A [`SystemModel`] describes job types (task-data graphs with interval
//! work), a platform (processors, memories, interconnects, power tables),
//! one arrival generator per job type and a deployment policy. Two engines
//! evaluate it with identical scheduling semantics:
//!
//! * [`reach_bounds`] explores the zone graph of the equivalent timed-automata
//!   network and returns exact makespan and per-instance latency intervals;
//! * [`simulate`] / [`run_campaign`] draw durations uniformly and produce
//!   timed traces, from which [`metrics`] derives statistical reports.
//!
//! The [`runner`] module ties both to the config format and output layout
//! used by the `dse` binary.

pub mod config;
pub mod fixtures;
pub mod generators;
pub mod metrics;
pub mod model;
pub mod plan;
pub mod reachability;
pub mod rng;
pub mod runner;
pub mod runtime;
pub mod scheduler;
pub mod simulator;
pub mod time;
pub mod zones;

pub use config::{parse_str, parse_system, ConfigError};
pub use generators::{Generator, GeneratorError, GeneratorKind};
pub use metrics::{MetricSpec, Report};
pub use model::{
    duration_interval, expand_comm_tasks, validate_model, SystemModel, TimeInterval, Violation, WorkInterval,
};
pub use plan::PlanError;
pub use reachability::{reach_bounds, ReachError, ReachOptions, ReachResult};
pub use runner::{RunError, RunSpec};
pub use simulator::{run_campaign, simulate, CampaignResult, SimError, TimedTrace};
pub use time::{Freq, Rate, Time, Volume, Work};
pub use zones::{Bound, Dbm, ZoneError};
