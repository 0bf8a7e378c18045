//! Reference models and the properties expected of them.
//!
//! Each builder returns an ordinary [`SystemModel`]; the JSON files under
//! `fixtures/` are these models serialized and are kept in sync by a test.
//! [`catalog`] lists every checked-in fixture with its expectations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::generators::{Generator, GeneratorKind};
use crate::model::{
    Application, DataEdge, Deployment, Interconnect, JobType, Locality, Memory, Platform, Policy, PowerEntry,
    PowerPair, Processor, SystemModel, TaskSpec, Transfer, WorkInterval,
};
use crate::runner::{Axis, Mode, RunSpec};
use crate::time::{Freq, Rate, Time, Volume};

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// A number or trend reported for the original case study.
    ReportedResult,
    /// Follows from a closed-form argument over the fixture's parameters.
    Analytic,
    /// Holds by the way the fixture is built.
    ByConstruction,
}

#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub claim: &'static str,
    pub origin: Origin,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub model: SystemModel,
    pub expectations: Vec<Expectation>,
}

/// Nominal work of a block in the band fixtures, in cycles.
pub const BAND_MU: f64 = 100.0;

fn processor(id: impl Into<String>, table: &[(f64, f64, f64)], on: bool) -> Processor {
    Processor {
        id: id.into(),
        frequencies: table.iter().map(|e| Freq::from_f64(e.0)).collect(),
        power: table
            .iter()
            .map(|&(f, s, d)| PowerEntry { frequency: Freq::from_f64(f), static_watts: s, dynamic_watts: d })
            .collect(),
        initially_on: on,
    }
}

fn unit_pes(n: usize) -> Vec<Processor> {
    (0..n).map(|i| processor(format!("PE{i}"), &[(1.0, 1.0, 3.0)], true)).collect()
}

fn task(id: impl Into<String>, lo: f64, hi: f64) -> TaskSpec {
    TaskSpec::new(id, WorkInterval::units(lo, hi))
}

fn periodic(job: &str, period: f64, count: u32) -> Generator {
    Generator::new(job, count, GeneratorKind::Periodic { period: Time::from_f64(period) })
}

fn model(
    name: &str,
    jobs: Vec<JobType>,
    platform: Platform,
    generators: Vec<Generator>,
    deployment: Deployment,
    k: u32,
) -> SystemModel {
    SystemModel {
        name: name.into(),
        application: Application { job_types: jobs },
        platform,
        generators,
        deployment,
        instance_bound: k,
    }
}

fn bare(processors: Vec<Processor>) -> Platform {
    Platform { processors, memories: vec![], interconnects: vec![] }
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

/// `T1 [1,2] -> T2 [3,4]` on one processor.
pub fn chain2() -> SystemModel {
    let job = JobType {
        name: "J".into(),
        tasks: vec![task("T1", 1.0, 2.0), task("T2", 3.0, 4.0)],
        edges: vec![DataEdge::new("T1", "T2")],
    };
    let mut d = Deployment::new(Policy::FifoLocal, 1);
    d.mapping = map(&[("T1", "PE0"), ("T2", "PE0")]);
    model("chain2", vec![job], bare(unit_pes(1)), vec![periodic("J", 100.0, 1)], d, 1)
}

/// Independent `a [1,3]` and `b [2,4]` on two processors.
pub fn indep2() -> SystemModel {
    let job = JobType { name: "J".into(), tasks: vec![task("a", 1.0, 3.0), task("b", 2.0, 4.0)], edges: vec![] };
    model(
        "indep2",
        vec![job],
        bare(unit_pes(2)),
        vec![periodic("J", 100.0, 1)],
        Deployment::new(Policy::FifoGlobal, 1),
        1,
    )
}

/// `split [1,2]`, then `m1 [1,3]` and `m2 [2,4]` in parallel, then `join [1,2]`,
/// FIFO on two processors.
pub fn diamond() -> SystemModel {
    let job = JobType {
        name: "J".into(),
        tasks: vec![task("split", 1.0, 2.0), task("m1", 1.0, 3.0), task("m2", 2.0, 4.0), task("join", 1.0, 2.0)],
        edges: vec![
            DataEdge::new("split", "m1"),
            DataEdge::new("split", "m2"),
            DataEdge::new("m1", "join"),
            DataEdge::new("m2", "join"),
        ],
    };
    model(
        "diamond",
        vec![job],
        bare(unit_pes(2)),
        vec![periodic("J", 100.0, 1)],
        Deployment::new(Policy::FifoGlobal, 1),
        1,
    )
}

/// Two tasks in sequence on processors of speed 1 and 2: each task's
/// duration depends on where the global scheduler puts it.
pub fn two_speed_chain() -> SystemModel {
    let job = JobType {
        name: "J".into(),
        tasks: vec![task("T1", 4.0, 6.0), task("T2", 2.0, 8.0)],
        edges: vec![DataEdge::new("T1", "T2")],
    };
    let platform = bare(vec![processor("slow", &[(1.0, 1.0, 2.0)], true), processor("fast", &[(2.0, 1.5, 5.0)], true)]);
    model(
        "two_speed_chain",
        vec![job],
        platform,
        vec![periodic("J", 100.0, 1)],
        Deployment::new(Policy::FifoGlobal, 1),
        1,
    )
}

/// Strict priority on `PE0`: `hi` (priority 2) waits for `pre` on `PE1`,
/// `lo` (priority 1) is enabled at once but must wait for `hi`.
pub fn strict_pair() -> SystemModel {
    let job = JobType {
        name: "J".into(),
        tasks: vec![task("pre", 1.0, 2.0), task("hi", 1.0, 1.0), task("lo", 2.0, 3.0)],
        edges: vec![DataEdge::new("pre", "hi")],
    };
    let mut d = Deployment::new(Policy::StrictPriorityLocal, 2);
    d.mapping = map(&[("pre", "PE1"), ("hi", "PE0"), ("lo", "PE0")]);
    d.priorities = [("hi".to_string(), 2), ("lo".to_string(), 1), ("pre".to_string(), 1)].into();
    model("strict_pair", vec![job], bare(unit_pes(2)), vec![periodic("J", 5.0, 2)], d, 2)
}

/// A jittered stream of three pipelined instances under global FIFO with
/// priorities.
pub fn stream3() -> SystemModel {
    let job = JobType {
        name: "S".into(),
        tasks: vec![task("a", 1.0, 2.0), task("b", 2.0, 4.0), task("c", 1.0, 3.0)],
        edges: vec![DataEdge::new("a", "b")],
    };
    let mut d = Deployment::new(Policy::FifoPriorityGlobal, 2);
    d.priorities = [("a".to_string(), 3), ("b".to_string(), 1), ("c".to_string(), 2)].into();
    let g = Generator::new("S", 3, GeneratorKind::Jitter { period: Time::from_units(3), jitter: Time::from_units(1) });
    model("stream3", vec![job], bare(unit_pes(2)), vec![g], d, 3)
}

fn band_platform(total: usize, active: usize, table: &[(f64, f64, f64)], dma: Interconnect) -> Platform {
    Platform {
        processors: (0..total).map(|i| processor(format!("PE{i:02}"), table, i < active)).collect(),
        memories: vec![
            Memory { id: "l2".into(), access_time: Time::ZERO, locality: Locality::Local },
            Memory { id: "ddr".into(), access_time: Time::from_f64(0.01), locality: Locality::Offchip },
        ],
        interconnects: vec![dma],
    }
}

fn dma(init: f64, rate: f64, power: PowerPair) -> Interconnect {
    Interconnect { id: "dma".into(), rate: Rate::from_f64(rate), init_latency: Time::from_f64(init), power }
}

fn offchip(volume: f64) -> Option<Transfer> {
    Some(Transfer { volume: Volume::from_f64(volume), memory: "ddr".into(), interconnect: None })
}

/// One band of 16 blocks read with a single transfer, split, processed in
/// parallel, merged and written back. Block work is `μ ± 18%` with
/// `μ = 100`; `p` of the 16 processors are on.
pub fn band16(p: usize) -> SystemModel {
    band16_with(p, BAND_MU)
}

pub fn band16_with(p: usize, mu: f64) -> SystemModel {
    let mut job = band_job("band", "", mu, 256.0, 256.0);
    job.name = "band".into();
    let platform = band_platform(
        16,
        p,
        &[(1.0, 1.0, 3.0)],
        dma(0.1, 16_000.0, PowerPair { static_watts: 0.2, dynamic_watts: 0.5 }),
    );
    model(
        "band16",
        vec![job],
        platform,
        vec![periodic("band", 100_000.0, 1)],
        Deployment::new(Policy::FifoGlobal, 1),
        1,
    )
}

/// Tasks of one band: `{prefix}split`, `{prefix}b00`..`{prefix}b15`, `{prefix}merge`.
fn band_job(name: &str, prefix: &str, mu: f64, read: f64, write: f64) -> JobType {
    let mut split = task(format!("{prefix}split"), 0.0, 0.0);
    split.input = offchip(read);
    let mut merge = task(format!("{prefix}merge"), 0.0, 0.0);
    merge.output = offchip(write);
    let mut tasks = vec![split];
    let mut edges = vec![];
    for i in 0..16 {
        let id = format!("{prefix}b{i:02}");
        tasks.push(task(id.clone(), 0.82 * mu, 1.18 * mu));
        edges.push(DataEdge::new(format!("{prefix}split"), id.clone()));
        edges.push(DataEdge::new(id, format!("{prefix}merge")));
    }
    tasks.push(merge);
    JobType { name: name.into(), tasks, edges }
}

/// Parameters shared by the band/block comparison.
#[derive(Debug, Clone, Copy)]
pub struct BlockSetup {
    pub work_mean: f64,
    /// Bytes per block.
    pub block_volume: f64,
    pub dma_init: f64,
    pub dma_rate: f64,
    pub freq_table: &'static [(f64, f64, f64)],
}

/// Read-granularity setup: DMA setup latency dominates the per-block
/// transfer time.
pub const GRANULARITY: BlockSetup = BlockSetup {
    work_mean: BAND_MU,
    block_volume: 64.0,
    dma_init: 2.0,
    dma_rate: 640.0,
    freq_table: &[(1.0, 1.0, 3.0)],
};

/// Sweep setup: block work `60000 ± 18%` cycles at 200, 400 or 600 MHz
/// (time in microseconds), short transfers.
pub const SWEEP: BlockSetup = BlockSetup {
    work_mean: 60_000.0,
    block_volume: 64.0,
    dma_init: 0.2,
    dma_rate: 200.0,
    freq_table: &[(200.0, 0.1, 0.4), (400.0, 0.15, 1.0), (600.0, 0.2, 1.8)],
};

fn block_platform(p: usize, s: &BlockSetup) -> Platform {
    band_platform(
        16,
        p,
        s.freq_table,
        dma(s.dma_init, s.dma_rate, PowerPair { static_watts: 0.05, dynamic_watts: 0.3 }),
    )
}

/// `bands` copies of the band job, each band's merge preceding the next
/// band's split.
pub fn band_copies(p: usize, bands: usize, s: &BlockSetup) -> SystemModel {
    let mut tasks = vec![];
    let mut edges = vec![];
    for j in 0..bands {
        let prefix = if bands == 1 { String::new() } else { format!("r{j:02}.") };
        let part = band_job("", &prefix, s.work_mean, 16.0 * s.block_volume, 16.0 * s.block_volume);
        tasks.extend(part.tasks);
        edges.extend(part.edges);
        if j > 0 {
            edges.push(DataEdge::new(format!("r{:02}.merge", j - 1), format!("{prefix}split")));
        }
    }
    let job = JobType { name: "image".into(), tasks, edges };
    model(
        &format!("band_x{bands}"),
        vec![job],
        block_platform(p, s),
        vec![periodic("image", 1.0e8, 1)],
        Deployment::new(Policy::FifoGlobal, 1),
        1,
    )
}

/// `bands` rows of 16 blocks, each block with its own read and write; block
/// `i` of row `j+1` follows block `i` of row `j`.
pub fn blockwise(p: usize, bands: usize, s: &BlockSetup) -> SystemModel {
    let mut tasks = vec![];
    let mut edges = vec![];
    for j in 0..bands {
        for i in 0..16 {
            let id = if bands == 1 { format!("b{i:02}") } else { format!("r{j:02}.b{i:02}") };
            let mut t = task(id.clone(), 0.82 * s.work_mean, 1.18 * s.work_mean);
            t.input = offchip(s.block_volume);
            t.output = offchip(s.block_volume);
            tasks.push(t);
            if j > 0 {
                edges.push(DataEdge::new(format!("r{:02}.b{i:02}", j - 1), id));
            }
        }
    }
    let job = JobType { name: "image".into(), tasks, edges };
    model(
        &format!("blockwise_x{bands}"),
        vec![job],
        block_platform(p, s),
        vec![periodic("image", 1.0e8, 1)],
        Deployment::new(Policy::FifoGlobal, 1),
        1,
    )
}

/// The 256-block image processed block by block, swept over processor count
/// and frequency.
pub fn power_sweep_model() -> SystemModel {
    let mut m = blockwise(16, 16, &SWEEP);
    m.name = "power_sweep".into();
    m
}

pub fn fixture_power_sweep(outdir: impl Into<std::path::PathBuf>) -> RunSpec {
    RunSpec {
        mode: Mode::Sweep,
        runs: 100,
        seed: 2012,
        axes: vec![
            Axis::new("platform.processor_count", ["1", "2", "4", "8", "16"]),
            Axis::new("platform.frequency", ["200", "400", "600"]),
        ],
        ..RunSpec::new(outdir)
    }
}

/// Frames per run of the stream fixture.
pub const STREAM_COUNT: u32 = 30;
/// Backlog capacity of the stream fixture.
pub const STREAM_CAPACITY: u32 = 4;
/// Jitter of the stream fixture's arrivals.
pub const STREAM_JITTER: f64 = 500.0;

/// Sixteen independent tasks of work `[150, 2100]` on four processors. The
/// fixed deployment maps `t00..t03` to `PE0`, `t04..t07` to `PE1` and so on.
pub fn mapping_stream(policy: Policy, period: f64, count: u32) -> SystemModel {
    let local = Some(Transfer { volume: Volume::from_units(64), memory: "l1".into(), interconnect: None });
    let tasks: Vec<TaskSpec> = (0..16)
        .map(|i| {
            let mut t = task(format!("t{i:02}"), 150.0, 2100.0);
            t.input = local.clone();
            t
        })
        .collect();
    let job = JobType { name: "frame".into(), tasks, edges: vec![] };
    let platform = Platform {
        processors: unit_pes(4),
        memories: vec![Memory { id: "l1".into(), access_time: Time::ZERO, locality: Locality::Local }],
        interconnects: vec![],
    };
    let mut d = Deployment::new(policy, STREAM_CAPACITY);
    if policy.is_local() {
        d.mapping = (0..16).map(|i| (format!("t{i:02}"), format!("PE{}", i / 4))).collect();
    }
    let g = Generator::new(
        "frame",
        count,
        GeneratorKind::Jitter { period: Time::from_f64(period), jitter: Time::from_f64(STREAM_JITTER) },
    );
    let name = format!("mapping_{}", if policy.is_local() { "fixed" } else { "global" });
    model(&name, vec![job], platform, vec![g], d, 1)
}

/// Every checked-in fixture with its expectations.
pub fn catalog() -> Vec<Fixture> {
    use Origin::*;
    let e = |claim, origin| Expectation { claim, origin };
    vec![
        Fixture { name: "chain2", model: chain2(), expectations: vec![e("makespan bounds are [4, 6]", Analytic)] },
        Fixture { name: "indep2", model: indep2(), expectations: vec![e("makespan bounds are [2, 4]", Analytic)] },
        Fixture {
            name: "diamond",
            model: diamond(),
            expectations: vec![
                e("makespan bounds are [4, 8]", Analytic),
                e("bounds contain every grid-enumerated concrete makespan and are attained", Analytic),
            ],
        },
        Fixture {
            name: "two_speed_chain",
            model: two_speed_chain(),
            expectations: vec![e("the first task runs on the slow processor, the second too", ByConstruction)],
        },
        Fixture {
            name: "strict_pair",
            model: strict_pair(),
            expectations: vec![e("lo never completes before hi within an instance", ByConstruction)],
        },
        Fixture {
            name: "stream3",
            model: stream3(),
            expectations: vec![e("simulated makespans and latencies lie within the formal bounds", Analytic)],
        },
        Fixture {
            name: "band16",
            model: band16(16),
            expectations: vec![
                e("with 16 processors the mean makespan is near the upper bound", ReportedResult),
                e("with 16 processors the mean makespan is within 1.5% of mu(0.82 + 16/17 * 0.36)", Analytic),
                e("with one processor the distribution is symmetric around 16 mu", ReportedResult),
                e("with one processor the mean is within 1% of 16 mu", Analytic),
                e("formal bounds contain every sampled makespan at any processor count", Analytic),
            ],
        },
        Fixture {
            name: "blockwise",
            model: blockwise(4, 1, &GRANULARITY),
            expectations: vec![
                e("mean makespan is below the band variant's at 2, 4 and 8 processors", ReportedResult),
                e("the speed-up over the band variant grows with the processor count", ReportedResult),
                e("with one processor the formal upper bounds differ by less than one band read", Analytic),
            ],
        },
        Fixture {
            name: "mapping_fixed",
            model: mapping_stream(Policy::FifoLocal, 7000.0, STREAM_COUNT),
            expectations: vec![
                e("single-instance worst-case latency is 8400", ReportedResult),
                e("mean latency exceeds the global deployment's at periods 7000, 6000, 5000, 4500", ReportedResult),
                e("period 4000 overflows the backlog in most runs", ReportedResult),
            ],
        },
        Fixture {
            name: "mapping_global",
            model: mapping_stream(Policy::FifoGlobal, 7000.0, STREAM_COUNT),
            expectations: vec![e("advantage over the fixed mapping grows from period 7000 to 4500", ReportedResult)],
        },
        Fixture {
            name: "power_sweep",
            model: power_sweep_model(),
            expectations: vec![
                e("mean makespan is non-increasing in the processor count at fixed frequency", Analytic),
                e("mean makespan is non-increasing in frequency at fixed processor count", Analytic),
                e("mean power is non-decreasing in frequency at fixed processor count", Analytic),
            ],
        },
    ]
}

/// Directory of the checked-in fixture files.
pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Writes `<name>.json` for every catalog entry into `dir`.
pub fn write_all(dir: &std::path::Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    catalog()
        .into_iter()
        .map(|f| {
            let path = dir.join(format!("{}.json", f.name));
            std::fs::write(&path, crate::config::to_json(&f.model) + "\n")?;
            Ok(path)
        })
        .collect()
}
