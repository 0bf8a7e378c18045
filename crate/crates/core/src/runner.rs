//! Campaign orchestration and the on-disk output layout.
//!
//! A run without axes writes into `outdir` directly. With axes, every point
//! of their cross product gets `outdir/<point>/`, and sweeps add
//! `outdir/tradeoff.csv` with one row per point. Each point directory holds
//! `report.json`, and for simulations also `samples.csv`, `values.csv`,
//! `hist-<metric>.csv` and, on request, `trace-<run>.txt`.
//!
//! Axis paths:
//!
//! | path | value | effect |
//! |---|---|---|
//! | `platform.processor_count` | n | the first n processors are on, the rest off |
//! | `platform.frequency` | f | every processor runs at f only; per-task frequencies are cleared |
//! | `deployment.policy` | policy name | replaces the policy |
//! | `deployment.queue_capacity` | n | replaces the capacity |
//! | `generator.d` | time | period of every periodic, jitter or uncertain generator |
//! | `generator.jitter` | time | jitter of every jitter or uncertain generator |
//! | `generator.count` | n | arrivals of every generator |
//! | `instance_bound` | n | replaces the instance bound |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::config::{model_hash, ConfigError};
use crate::generators::GeneratorKind;
use crate::metrics::{self, MetricSpec};
use crate::model::{validate_model, Policy, SystemModel};
use crate::reachability::{reach_bounds_with, ReachError, ReachOptions, ReachResult};
use crate::rng;
use crate::simulator::{run_campaign_with, CampaignOptions, CampaignResult, SimError};
use crate::time::{Freq, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Simulate,
    Sweep,
}

/// A model parameter and the values it takes in a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub path: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn new<I, S>(path: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { path: path.into(), values: values.into_iter().map(Into::into).collect() }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    /// `path=v1,v2,...`
    fn from_str(s: &str) -> Result<Self, String> {
        let (path, values) = s.split_once('=').ok_or_else(|| format!("axis `{s}`: expected path=v1,v2,..."))?;
        let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(format!("axis `{path}` has no values"));
        }
        Ok(Axis::new(path.trim(), values))
    }
}

pub const AXIS_PATHS: [&str; 8] = [
    "platform.processor_count",
    "platform.frequency",
    "deployment.policy",
    "deployment.queue_capacity",
    "generator.d",
    "generator.jitter",
    "generator.count",
    "instance_bound",
];

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub mode: Mode,
    pub runs: u32,
    pub seed: u64,
    /// Empty selects the default metrics.
    pub metrics: Vec<MetricSpec>,
    pub axes: Vec<Axis>,
    pub outdir: PathBuf,
    pub traces: bool,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub bins: usize,
    /// Instances per generator analyzed by `verify`; defaults to the model's bound.
    pub k: Option<u32>,
    pub clock_budget: usize,
    pub state_cap: usize,
    pub dump_graph: bool,
}

impl RunSpec {
    pub fn new(outdir: impl Into<PathBuf>) -> Self {
        let reach = ReachOptions::default();
        Self {
            mode: Mode::Simulate,
            runs: 100,
            seed: 0,
            metrics: Vec::new(),
            axes: Vec::new(),
            outdir: outdir.into(),
            traces: false,
            workers: None,
            bins: metrics::DEFAULT_BINS,
            k: None,
            clock_budget: reach.clock_budget,
            state_cap: reach.state_cap,
            dump_graph: false,
        }
    }

    fn check(&self) -> Result<(), RunError> {
        if self.mode != Mode::Verify && self.runs == 0 {
            return Err(RunError::InvalidSpec("simulate and sweep need at least one run".into()));
        }
        if self.mode == Mode::Sweep && self.axes.is_empty() {
            return Err(RunError::InvalidSpec("a sweep needs at least one axis".into()));
        }
        if self.bins == 0 {
            return Err(RunError::InvalidSpec("histograms need at least one bin".into()));
        }
        for a in &self.axes {
            if !AXIS_PATHS.contains(&a.path.as_str()) {
                return Err(RunError::InvalidSpec(format!(
                    "unknown axis `{}`; known axes: {}",
                    a.path,
                    AXIS_PATHS.join(", ")
                )));
            }
            if a.values.is_empty() {
                return Err(RunError::InvalidSpec(format!("axis `{}` has no values", a.path)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid run: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// 2 for input errors, 3 when the formal search exceeds its budget or
    /// state cap, 4 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::InvalidSpec(_) => 2,
            RunError::Reach(ReachError::BudgetExceeded { .. } | ReachError::SearchCapExceeded { .. }) => 3,
            RunError::Reach(ReachError::Plan(_)) => 2,
            RunError::Sim(SimError::Generator { .. } | SimError::Plan(_) | SimError::Metrics(_)) => 2,
            RunError::Reach(_) | RunError::Sim(_) | RunError::Io { .. } => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub enum PointResult {
    Verified(ReachResult),
    /// Traces are dropped once written.
    Simulated(CampaignResult),
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub name: String,
    pub settings: Vec<(String, String)>,
    pub dir: PathBuf,
    pub result: PointResult,
}

impl PointOutcome {
    pub fn campaign(&self) -> Option<&CampaignResult> {
        match &self.result {
            PointResult::Simulated(c) => Some(c),
            PointResult::Verified(_) => None,
        }
    }

    pub fn bounds(&self) -> Option<&ReachResult> {
        match &self.result {
            PointResult::Verified(r) => Some(r),
            PointResult::Simulated(_) => None,
        }
    }

    pub fn setting(&self, path: &str) -> Option<&str> {
        self.settings.iter().find(|(p, _)| p == path).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub points: Vec<PointOutcome>,
}

/// Runs `spec` against `model`, writing every artifact under `spec.outdir`.
pub fn run(spec: &RunSpec, model: &SystemModel) -> Result<RunOutcome, RunError> {
    spec.check()?;
    match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| RunError::InvalidSpec(e.to_string()))?
            .install(|| run_points(spec, model)),
        None => run_points(spec, model),
    }
}

fn run_points(spec: &RunSpec, model: &SystemModel) -> Result<RunOutcome, RunError> {
    let points = cross_product(&spec.axes);
    let prepared = points
        .into_iter()
        .map(|settings| {
            let mut m = model.clone();
            for (path, value) in &settings {
                apply_axis(&mut m, path, value)?;
            }
            let violations = validate_model(&m);
            if !violations.is_empty() {
                return Err(RunError::Config(ConfigError::Semantic(violations)));
            }
            let name = point_name(&settings);
            let dir = if spec.axes.is_empty() { spec.outdir.clone() } else { spec.outdir.join(&name) };
            Ok((settings, name, dir, m))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let outcomes = prepared
        .into_par_iter()
        .map(|(settings, name, dir, m)| run_point(spec, &m, settings, name, dir))
        .collect::<Result<Vec<_>, RunError>>()?;
    let out = RunOutcome { points: outcomes };
    if spec.mode == Mode::Sweep {
        write_file(&spec.outdir.join("tradeoff.csv"), |w| write_tradeoff(w, &spec.axes, &out))?;
    }
    Ok(out)
}

fn cross_product(axes: &[Axis]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for a in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                a.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((a.path.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn point_name(settings: &[(String, String)]) -> String {
    settings.iter().map(|(p, v)| format!("{}={v}", p.rsplit('.').next().unwrap_or(p))).collect::<Vec<_>>().join("_")
}

fn parse_value<T: std::str::FromStr>(path: &str, v: &str) -> Result<T, RunError> {
    v.parse().map_err(|_| RunError::InvalidSpec(format!("axis `{path}`: cannot parse `{v}`")))
}

fn parse_time(path: &str, v: &str) -> Result<Time, RunError> {
    let x: f64 = parse_value(path, v)?;
    if !x.is_finite() || x < 0.0 {
        return Err(RunError::InvalidSpec(format!("axis `{path}`: `{v}` is not a duration")));
    }
    Ok(Time::from_f64(x))
}

/// Sets the model parameter named by `path`.
pub fn apply_axis(m: &mut SystemModel, path: &str, value: &str) -> Result<(), RunError> {
    let bad = |msg: String| RunError::InvalidSpec(format!("axis `{path}`: {msg}"));
    match path {
        "platform.processor_count" => {
            let n: usize = parse_value(path, value)?;
            if n == 0 || n > m.platform.processors.len() {
                return Err(bad(format!("{n} processors requested, {} declared", m.platform.processors.len())));
            }
            for (i, p) in m.platform.processors.iter_mut().enumerate() {
                p.initially_on = i < n;
            }
        }
        "platform.frequency" => {
            let f = Freq::from_f64(parse_value(path, value)?);
            for p in &mut m.platform.processors {
                if !p.frequencies.contains(&f) {
                    return Err(bad(format!("processor `{}` does not support {f}", p.id)));
                }
                p.frequencies = vec![f];
                p.power.retain(|e| e.frequency == f);
            }
            m.deployment.task_frequency.clear();
        }
        "deployment.policy" => {
            m.deployment.policy = value.parse::<Policy>().map_err(bad)?;
        }
        "deployment.queue_capacity" => m.deployment.queue_capacity = parse_value(path, value)?,
        "generator.d" => {
            let d = parse_time(path, value)?;
            for g in &mut m.generators {
                match &mut g.kind {
                    GeneratorKind::Periodic { period }
                    | GeneratorKind::Jitter { period, .. }
                    | GeneratorKind::Uncertain { period, .. } => *period = d,
                    _ => return Err(bad(format!("generator of `{}` has no period", g.job_type))),
                }
            }
        }
        "generator.jitter" => {
            let j = parse_time(path, value)?;
            for g in &mut m.generators {
                match &mut g.kind {
                    GeneratorKind::Jitter { jitter, .. } | GeneratorKind::Uncertain { jitter, .. } => *jitter = j,
                    _ => return Err(bad(format!("generator of `{}` has no jitter", g.job_type))),
                }
            }
        }
        "generator.count" => {
            let n: u32 = parse_value(path, value)?;
            for g in &mut m.generators {
                g.count = n;
                g.arrivals = None;
            }
        }
        "instance_bound" => m.instance_bound = parse_value(path, value)?,
        _ => return Err(bad("not a sweepable parameter".into())),
    }
    Ok(())
}

fn run_point(
    spec: &RunSpec,
    m: &SystemModel,
    settings: Vec<(String, String)>,
    name: String,
    dir: PathBuf,
) -> Result<PointOutcome, RunError> {
    fs::create_dir_all(&dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
    let settings_json: serde_json::Map<String, serde_json::Value> =
        settings.iter().map(|(p, v)| (p.clone(), json!(v))).collect();
    let result = match spec.mode {
        Mode::Verify => {
            let opts = ReachOptions {
                clock_budget: spec.clock_budget,
                state_cap: spec.state_cap,
                instance_bound: spec.k,
                dump_graph: spec.dump_graph,
                ..ReachOptions::default()
            };
            let r = reach_bounds_with(m, &opts)?;
            let report = json!({
                "mode": "verify",
                "model": m.name,
                "model_hash": model_hash(m),
                "settings": settings_json,
                "clock_budget": spec.clock_budget,
                "bounds": r,
            });
            write_json(&dir.join("report.json"), &report)?;
            if let Some(g) = &r.graph {
                write_file(&dir.join("graph.txt"), |w| g.iter().try_for_each(|l| writeln!(w, "{l}")))?;
            }
            PointResult::Verified(r)
        }
        Mode::Simulate | Mode::Sweep => {
            let opts = CampaignOptions {
                metrics: spec.metrics.clone(),
                bins: spec.bins,
                keep_traces: spec.traces,
                ..CampaignOptions::new(spec.runs, spec.seed)
            };
            let mut c = run_campaign_with(m, &opts)?;
            write_campaign(&dir, m, spec, &settings_json, &c)?;
            c.traces.clear();
            PointResult::Simulated(c)
        }
    };
    Ok(PointOutcome { name, settings, dir, result })
}

fn write_campaign(
    dir: &Path,
    m: &SystemModel,
    spec: &RunSpec,
    settings: &serde_json::Map<String, serde_json::Value>,
    c: &CampaignResult,
) -> Result<(), RunError> {
    let reports: serde_json::Map<String, serde_json::Value> = c
        .metrics
        .iter()
        .zip(&c.reports)
        .map(|(s, r)| (s.name(), serde_json::to_value(r).expect("reports serialize")))
        .collect();
    let report = json!({
        "mode": "simulate",
        "model": m.name,
        "model_hash": c.model_hash,
        "settings": settings,
        "rng": rng::ALGORITHM,
        "seed": spec.seed,
        "runs": spec.runs,
        "metrics": reports,
        "overflow": { "total": c.overflow_total, "runs_with_overflow": c.runs_with_overflow },
    });
    write_json(&dir.join("report.json"), &report)?;
    let rows: Vec<(u32, Vec<Vec<f64>>)> = c.runs.iter().map(|r| (r.run, r.values.clone())).collect();
    write_file(&dir.join("samples.csv"), |w| metrics::write_samples_csv(w, &c.metrics, &rows))?;
    write_file(&dir.join("values.csv"), |w| metrics::write_values_csv(w, &c.metrics, &rows))?;
    for (s, r) in c.metrics.iter().zip(&c.reports) {
        let file = format!("hist-{}.csv", file_safe(&s.name()));
        write_file(&dir.join(file), |w| metrics::write_histogram_csv(w, r))?;
    }
    for t in &c.traces {
        write_file(&dir.join(format!("trace-{}.txt", t.meta.run)), |w| w.write_all(t.to_text().as_bytes()))?;
    }
    Ok(())
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '-' }).collect()
}

/// Mean over every job latency value of a campaign.
pub fn mean_latency(c: &CampaignResult) -> Option<f64> {
    let (sum, n) = c
        .metrics
        .iter()
        .zip(&c.reports)
        .filter(|(s, _)| matches!(s, MetricSpec::JobLatency { .. }))
        .filter_map(|(_, r)| r.summary())
        .fold((0.0, 0), |(sum, n), s| (sum + s.mean * s.count as f64, n + s.count));
    (n > 0).then(|| sum / n as f64)
}

fn write_tradeoff(w: &mut dyn Write, axes: &[Axis], out: &RunOutcome) -> std::io::Result<()> {
    for a in axes {
        write!(w, "{},", a.path)?;
    }
    writeln!(w, "runs,mean_makespan,mean_latency,mean_energy,mean_power,runs_with_overflow")?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for p in &out.points {
        let Some(c) = p.campaign() else { continue };
        for (_, v) in &p.settings {
            write!(w, "{v},")?;
        }
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.runs.len(),
            cell(c.mean("makespan")),
            cell(mean_latency(c)),
            cell(c.mean("energy")),
            cell(c.mean("power")),
            c.runs_with_overflow
        )?;
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), RunError> {
    let io = |source| RunError::Io { path: path.display().to_string(), source };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    body(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<(), RunError> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, v)?;
        writeln!(w)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn verify_writes_the_chain_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec { mode: Mode::Verify, ..RunSpec::new(dir.path()) };
        let out = run(&spec, &fixtures::chain2()).unwrap();
        let r = out.points[0].bounds().unwrap();
        assert_eq!(r.makespan.unwrap().to_string(), "[4.000000, 6.000000]");
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(report["bounds"]["makespan"], json!([4.0, 6.0]));
    }

    #[test]
    fn simulate_writes_one_row_per_run() {
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec { runs: 100, seed: 1, traces: true, ..RunSpec::new(dir.path()) };
        let out = run(&spec, &fixtures::band16(4)).unwrap();
        let csv = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
        assert_eq!(csv.lines().count(), 101);
        assert!(out.points[0].campaign().unwrap().mean("makespan").is_some());
        assert!(dir.path().join("trace-99.txt").exists());
        assert!(dir.path().join("hist-makespan.csv").exists());
    }

    #[test]
    fn sweep_writes_a_tradeoff_row_per_point() {
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec {
            mode: Mode::Sweep,
            runs: 5,
            axes: vec![
                Axis::new("platform.processor_count", ["1", "2"]),
                Axis::new("deployment.queue_capacity", ["1", "2"]),
            ],
            ..RunSpec::new(dir.path())
        };
        let out = run(&spec, &fixtures::band16(16)).unwrap();
        assert_eq!(out.points.len(), 4);
        assert_eq!(out.points[1].name, "processor_count=1_queue_capacity=2");
        let t = fs::read_to_string(dir.path().join("tradeoff.csv")).unwrap();
        assert_eq!(t.lines().count(), 5);
        assert!(t.starts_with("platform.processor_count,deployment.queue_capacity,runs,mean_makespan"));
    }

    #[test]
    fn sweep_points_match_individual_runs() {
        let dir = tempfile::tempdir().unwrap();
        let axis = Axis::new("platform.processor_count", ["2", "8"]);
        let spec = RunSpec { mode: Mode::Sweep, runs: 10, seed: 3, axes: vec![axis], ..RunSpec::new(dir.path()) };
        run(&spec, &fixtures::band16(16)).unwrap();
        for p in ["2", "8"] {
            let single = tempfile::tempdir().unwrap();
            let mut m = fixtures::band16(16);
            apply_axis(&mut m, "platform.processor_count", p).unwrap();
            run(&RunSpec { runs: 10, seed: 3, ..RunSpec::new(single.path()) }, &m).unwrap();
            let a = fs::read(dir.path().join(format!("processor_count={p}/samples.csv"))).unwrap();
            let b = fs::read(single.path().join("samples.csv")).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn axis_parsing_and_whitelist() {
        let a: Axis = "generator.d=7000,6000".parse().unwrap();
        assert_eq!(a, Axis::new("generator.d", ["7000", "6000"]));
        assert!("generator.d".parse::<Axis>().is_err());
        let spec = RunSpec { mode: Mode::Sweep, axes: vec![Axis::new("platform.color", ["red"])], ..RunSpec::new("x") };
        assert_eq!(run(&spec, &fixtures::chain2()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn frequency_axis_restricts_the_tables() {
        let mut m = fixtures::power_sweep_model();
        apply_axis(&mut m, "platform.frequency", "400").unwrap();
        assert!(m
            .platform
            .processors
            .iter()
            .all(|p| p.frequencies == vec![Freq::from_units(400)] && p.power.len() == 1));
        assert!(apply_axis(&mut m, "platform.frequency", "500").is_err());
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let spec = RunSpec { mode: Mode::Verify, clock_budget: 2, ..RunSpec::new(dir.path()) };
        assert_eq!(run(&spec, &fixtures::chain2()).unwrap_err().exit_code(), 3);
        let spec = RunSpec { runs: 0, ..RunSpec::new(dir.path()) };
        assert_eq!(run(&spec, &fixtures::chain2()).unwrap_err().exit_code(), 2);
        let mut m = fixtures::chain2();
        m.deployment.queue_capacity = 0;
        assert_eq!(run(&RunSpec::new(dir.path()), &m).unwrap_err().exit_code(), 2);
    }
}
