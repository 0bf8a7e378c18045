//! Acceptance suite: one check per criterion, each printed as a pass/fail
//! line. Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use dse::fixtures::{self, band16, fixture_power_sweep, mapping_stream, power_sweep_model, BAND_MU, STREAM_COUNT};
use dse::generators::{check_variability, sample_arrivals};
use dse::model::Policy;
use dse::rng::{run_stream, unit, Stream};
use dse::runner::{self, mean_latency, Mode, RunSpec};
use dse::simulator::{EventKind, Simulator};
use dse::{
    reach_bounds, run_campaign, Bound, Dbm, Generator, GeneratorKind, ReachOptions, SystemModel, Time, TimeInterval,
    TimedTrace,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("soundness of formal bounds on five fixtures", soundness),
        ("analytic bounds of the two-task models", analytic_bounds),
        ("fixed-mapping single-instance worst case", fixed_mapping_worst_case),
        ("band makespan distribution shape", band_shape),
        ("global beats fixed mapping, growing with load", mapping_ordering),
        ("overflow at period 4000", overflow),
        ("power sweep monotonicity", power_sweep),
        ("DBM operations against integer points", dbm_oracle),
        ("determinism of traces and CSVs", determinism),
        ("generator laws", generator_laws),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("{what} took {:?}, limit {limit:?}", start.elapsed()))
}

/// Makespan and per-instance latency read directly off a trace.
struct Observed {
    makespan: Option<Time>,
    latency: BTreeMap<(String, u32), Time>,
}

fn observe(trace: &TimedTrace) -> Observed {
    let mut arrivals: BTreeMap<(String, u32), Time> = BTreeMap::new();
    let mut last_end: BTreeMap<(String, u32), Time> = BTreeMap::new();
    let mut first = None;
    let mut last = None;
    for e in &trace.events {
        match &e.kind {
            EventKind::Arrival { job, instance } => {
                first.get_or_insert(e.time);
                arrivals.insert((job.clone(), *instance), e.time);
            }
            EventKind::End { job, instance, .. } => {
                last = Some(e.time);
                let t = last_end.entry((job.clone(), *instance)).or_insert(e.time);
                *t = (*t).max(e.time);
            }
            _ => {}
        }
    }
    let latency = last_end.into_iter().map(|(k, end)| (k.clone(), end - arrivals[&k])).collect();
    Observed { makespan: first.zip(last).map(|(a, b)| b - a), latency }
}

/// Simulates `runs` runs and checks every makespan and latency against the
/// formal bounds. Returns the number of checked values.
fn contained(m: &SystemModel, runs: u32, seed: u64) -> Result<usize, String> {
    let r = reach_bounds(m).map_err(|e| format!("{}: {e}", m.name))?;
    let makespan = r.makespan.ok_or_else(|| format!("{}: no complete run", m.name))?;
    let latency: BTreeMap<(String, u32), TimeInterval> =
        r.latency.iter().filter_map(|l| l.bounds.map(|b| ((l.job.clone(), l.instance), b))).collect();
    let sim = Simulator::new(m).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for run in 0..runs as u64 {
        let trace = sim.run(seed, run).map_err(|e| e.to_string())?;
        let o = observe(&trace);
        let ms = o.makespan.ok_or_else(|| format!("{} run {run}: no completion", m.name))?;
        ensure(makespan.contains(ms), || format!("{} run {run}: makespan {ms} outside {makespan}", m.name))?;
        for (key, l) in &o.latency {
            let b = latency.get(key).ok_or_else(|| format!("{} run {run}: no bound for {key:?}", m.name))?;
            ensure(b.contains(*l), || format!("{} run {run}: latency {key:?} {l} outside {b}", m.name))?;
        }
        checked += 1 + o.latency.len();
    }
    Ok(checked)
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let mut stream = mapping_stream(Policy::FifoGlobal, 7000.0, 2);
    stream.instance_bound = 2;
    let models = [
        fixtures::diamond(),
        fixtures::stream3(),
        band16(16),
        fixtures::blockwise(4, 1, &fixtures::GRANULARITY),
        stream,
    ];
    let mut total = 0;
    for m in &models {
        let net = dse::reachability::build_network(m, &ReachOptions::default()).map_err(|e| e.to_string())?;
        ensure(net.clock_estimate <= 25, || format!("{} needs {} clocks", m.name, net.clock_estimate))?;
        total += contained(m, 1000, 1)?;
    }
    within(Duration::from_secs(300), start, "soundness suite")?;
    Ok(format!("{total} values from 5 models x 1000 runs inside the formal bounds"))
}

fn analytic_bounds() -> Outcome {
    let units = |a, b| TimeInterval::new(Time::from_units(a), Time::from_units(b)).unwrap();
    let chain = reach_bounds(&fixtures::chain2()).map_err(|e| e.to_string())?.makespan;
    ensure(chain == Some(units(4, 6)), || format!("chain makespan {chain:?}"))?;
    let indep = reach_bounds(&fixtures::indep2()).map_err(|e| e.to_string())?.makespan;
    ensure(indep == Some(units(2, 4)), || format!("independent makespan {indep:?}"))?;
    Ok("chain [4, 6], independent pair [2, 4]".into())
}

fn fixed_mapping_worst_case() -> Outcome {
    let start = Instant::now();
    let r = reach_bounds(&mapping_stream(Policy::FifoLocal, 7000.0, 1)).map_err(|e| e.to_string())?;
    let b = r.latency[0].bounds.ok_or("frame never completes")?;
    ensure(b.hi == Time::from_units(8400), || format!("upper bound {}", b.hi))?;
    within(Duration::from_secs(60), start, "analysis")?;
    Ok(format!("latency bounds {b}"))
}

fn band_shape() -> Outcome {
    let mut notes = Vec::new();
    let mut checked = 0;
    for p in [1, 2, 4, 8, 16] {
        let m = band16(p);
        checked += contained(&m, 1000, 4)?;
        let mean = run_campaign(&m, 1000, 4).map_err(|e| e.to_string())?.mean("makespan").ok_or("no makespan")?;
        let target = match p {
            1 => Some((16.0 * BAND_MU, 0.01)),
            16 => Some((BAND_MU * (0.82 + 16.0 / 17.0 * 0.36), 0.015)),
            _ => None,
        };
        if let Some((target, tol)) = target {
            let rel = (mean - target).abs() / target;
            ensure(rel <= tol, || format!("P={p}: mean {mean:.3}, target {target:.3}, off by {:.2}%", 100.0 * rel))?;
            notes.push(format!("P={p} mean {mean:.2} vs {target:.2} ({:.2}%)", 100.0 * rel));
        }
    }
    Ok(format!("{}; {checked} samples inside bounds at P in 1..16", notes.join(", ")))
}

fn mapping_ordering() -> Outcome {
    let start = Instant::now();
    let mut adv = BTreeMap::new();
    let mut notes = Vec::new();
    for period in [7000u32, 6000, 5000, 4500] {
        let lat = |policy| {
            let c = run_campaign(&mapping_stream(policy, period as f64, STREAM_COUNT), 100, 1).unwrap();
            mean_latency(&c).unwrap()
        };
        let (fixed, global) = (lat(Policy::FifoLocal), lat(Policy::FifoGlobal));
        ensure(global < fixed, || format!("period {period}: global {global:.1} >= fixed {fixed:.1}"))?;
        adv.insert(period, fixed - global);
        notes.push(format!("{period}: {fixed:.0}/{global:.0}"));
    }
    ensure(adv[&4500] > adv[&7000], || format!("advantage {:.1} at 4500 vs {:.1} at 7000", adv[&4500], adv[&7000]))?;
    within(Duration::from_secs(300), start, "campaigns")?;
    Ok(format!("fixed/global {}; advantage {:.0} -> {:.0}", notes.join(", "), adv[&7000], adv[&4500]))
}

fn overflow() -> Outcome {
    let c =
        run_campaign(&mapping_stream(Policy::FifoLocal, 4000.0, STREAM_COUNT), 100, 1).map_err(|e| e.to_string())?;
    ensure(c.runs_with_overflow >= 50, || format!("{} of 100 runs overflow", c.runs_with_overflow))?;
    Ok(format!("{} of 100 runs overflow, {} dropped frames", c.runs_with_overflow, c.overflow_total))
}

fn read_tradeoff(path: &Path) -> Result<Vec<(u32, u32, f64, f64)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty tradeoff table")?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or(format!("no column {name}"));
    let (p, f, ms, pw) =
        (col("platform.processor_count")?, col("platform.frequency")?, col("mean_makespan")?, col("mean_power")?);
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            Ok((
                c[p].parse().map_err(|_| l.to_string())?,
                c[f].parse().map_err(|_| l.to_string())?,
                c[ms].parse().map_err(|_| l.to_string())?,
                c[pw].parse().map_err(|_| l.to_string())?,
            ))
        })
        .collect()
}

fn power_sweep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    runner::run(&fixture_power_sweep(dir.path()), &power_sweep_model()).map_err(|e| e.to_string())?;
    let rows = read_tradeoff(&dir.path().join("tradeoff.csv"))?;
    ensure(rows.len() == 15, || format!("{} sweep points", rows.len()))?;
    let at = |p: u32, f: u32| rows.iter().find(|r| r.0 == p && r.1 == f).copied().unwrap();
    let (ps, fs) = ([1, 2, 4, 8, 16], [200, 400, 600]);
    for f in fs {
        for w in ps.windows(2) {
            let (a, b) = (at(w[0], f), at(w[1], f));
            ensure(b.2 <= a.2, || format!("f={f}: makespan {} at P={} > {} at P={}", b.2, w[1], a.2, w[0]))?;
        }
    }
    for p in ps {
        for w in fs.windows(2) {
            let (a, b) = (at(p, w[0]), at(p, w[1]));
            ensure(b.2 <= a.2, || format!("P={p}: makespan rises from f={} to f={}", w[0], w[1]))?;
            ensure(b.3 >= a.3, || format!("P={p}: power falls from f={} to f={}", w[0], w[1]))?;
        }
    }
    let (slow, fast) = (at(1, 200), at(16, 600));
    Ok(format!("15 points ordered; makespan {:.0} -> {:.0}, power {:.2} -> {:.2}", slow.2, fast.2, slow.3, fast.3))
}

/// `x_i - x_j <= c` with index 0 the constant zero.
type Constraint = (usize, usize, i64);

fn random_constraints(rng: &mut Stream, n: usize) -> Vec<Constraint> {
    let mut draw = |lo: i64, hi: i64| lo + (unit(rng) * (hi - lo + 1) as f64) as i64;
    let mut cs: Vec<Constraint> = (1..=n).map(|i| (i, 0, draw(0, 10))).collect();
    for i in 0..=n {
        for j in 0..=n {
            if i != j && draw(0, 2) == 0 {
                cs.push((i, j, draw(-10, 10)));
            }
        }
    }
    cs
}

fn build(n: usize, cs: &[Constraint]) -> Dbm {
    let mut d = Dbm::unconstrained(n);
    for &(i, j, c) in cs {
        d.constrain(i, j, Bound::le(Time::from_units(c))).unwrap();
    }
    d
}

/// Integer points of `[0, 10]^n` satisfying `cs`.
fn integer_points(n: usize, cs: &[Constraint]) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut p = vec![0i64; n];
    loop {
        let v = |i: usize| if i == 0 { 0 } else { p[i - 1] };
        if cs.iter().all(|&(i, j, c)| v(i) - v(j) <= c) {
            out.push(p.clone());
        }
        let mut k = 0;
        while k < n && p[k] == 10 {
            p[k] = 0;
            k += 1;
        }
        if k == n {
            return out;
        }
        p[k] += 1;
    }
}

fn dbm_oracle() -> Outcome {
    let mut rng = run_stream(8, 0);
    let mut nonempty = 0;
    let mut inclusions = 0;
    for case in 0..500 {
        let n = 1 + case % 4;
        let (ca, cb) = (random_constraints(&mut rng, n), random_constraints(&mut rng, n));
        let (a, b) = (build(n, &ca), build(n, &cb));
        let (pa, pb) = (integer_points(n, &ca), integer_points(n, &cb));
        let empty = a.is_empty().map_err(|e| e.to_string())?;
        ensure(empty == pa.is_empty(), || format!("case {case}: emptiness {empty}, {} points", pa.len()))?;
        if !empty {
            nonempty += 1;
            for c in 1..=n {
                let iv = a.clock_bounds(c).map_err(|e| e.to_string())?;
                let lo = pa.iter().map(|p| p[c - 1]).min().unwrap();
                let hi = pa.iter().map(|p| p[c - 1]).max().unwrap();
                ensure(iv.lo == Time::from_units(lo) && iv.hi == Time::from_units(hi), || {
                    format!("case {case}: clock {c} bounds {iv}, points give [{lo}, {hi}]")
                })?;
            }
        }
        let inc = a.includes(&b).map_err(|e| e.to_string())?;
        let oracle = pb.iter().all(|p| pa.contains(p));
        ensure(inc == oracle, || format!("case {case}: includes {inc}, points say {oracle}"))?;
        inclusions += inc as usize;
    }
    Ok(format!("500 random zones ({nonempty} non-empty, {inclusions} inclusions) agree"))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let run_into = |spec: RunSpec, m: &SystemModel| {
        runner::run(&spec, m).unwrap();
        files(&spec.outdir)
    };
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = fixtures::stream3();
    let simulate = |name: &str| RunSpec {
        mode: Mode::Simulate,
        runs: 50,
        seed: 99,
        traces: true,
        ..RunSpec::new(tmp.path().join(name))
    };
    let (a, b) = (run_into(simulate("a"), &m), run_into(simulate("b"), &m));
    ensure(a == b, || "two simulate invocations differ".into())?;
    let traces = a.keys().filter(|k| k.contains("trace-")).count();
    ensure(traces == 50, || format!("{traces} trace files"))?;

    let sweep = |name: &str, workers| RunSpec {
        mode: Mode::Sweep,
        runs: 40,
        seed: 5,
        traces: true,
        workers: Some(workers),
        axes: vec![
            runner::Axis::new("platform.processor_count", ["1", "2"]),
            runner::Axis::new("deployment.policy", ["fifo_global", "fifo_priority_global"]),
        ],
        ..RunSpec::new(tmp.path().join(name))
    };
    let (one, many) = (run_into(sweep("w1", 1), &m), run_into(sweep("w4", 4), &m));
    ensure(one == many, || {
        let diff: Vec<&String> = one.keys().filter(|k| one.get(*k) != many.get(*k)).collect();
        format!("1-worker and 4-worker sweeps differ in {diff:?}")
    })?;
    let csvs = one.keys().filter(|k| k.ends_with(".csv")).count();
    Ok(format!("{} simulate files and {} sweep files ({csvs} CSVs) byte-identical", a.len(), one.len()))
}

/// Brute force over the half-unit grid; event times and the window are
/// integers, so every distinct window count is attained there.
fn variability_oracle(times: &[i64], window: i64, min: Option<u32>, max: u32) -> bool {
    let last = *times.last().unwrap();
    let count = |r2: i64| times.iter().filter(|&&t| 2 * t >= r2 && 2 * t <= r2 + 2 * window).count();
    let upper = (2 * (times[0] - window - 1)..=2 * (last + 1)).all(|r2| count(r2) <= max as usize);
    let lower = match min {
        None => true,
        Some(m) => (0..=2 * (last - window)).all(|r2| count(r2) >= m as usize),
    };
    upper && lower
}

fn generator_laws() -> Outcome {
    let (d, j) = (Time::from_units(10), Time::from_units(3));
    let jitter = Generator::new("J", 1000, GeneratorKind::Jitter { period: d, jitter: j });
    let times = sample_arrivals(&jitter, &mut run_stream(10, 0)).map_err(|e| e.to_string())?;
    for (k, t) in times.iter().enumerate() {
        let dev = *t - Time::from_ticks(d.ticks() * k as i64);
        ensure(!dev.is_negative() && dev <= j, || format!("jitter index {}: deviation {dev}", k + 1))?;
    }
    let uncertain = Generator::new("J", 1000, GeneratorKind::Uncertain { period: d, jitter: j });
    let times = sample_arrivals(&uncertain, &mut run_stream(10, 1)).map_err(|e| e.to_string())?;
    ensure(times[0] >= Time::ZERO && times[0] <= j, || format!("first arrival {}", times[0]))?;
    for (k, w) in times.windows(2).enumerate() {
        let gap = w[1] - w[0];
        ensure(gap >= d && gap <= d + j, || format!("uncertain gap {} is {gap}", k + 2))?;
    }

    let mut rng = run_stream(10, 2);
    let mut draw = |lo: i64, hi: i64| lo + (unit(&mut rng) * (hi - lo + 1) as f64) as i64;
    let mut accepted = 0;
    for case in 0..100 {
        let len = draw(1, 12) as usize;
        let mut ev: Vec<i64> = (0..len).map(|_| draw(0, 30)).collect();
        ev.sort_unstable();
        let window = draw(1, 8);
        let max = draw(1, 4) as u32;
        let min = (case % 2 == 0).then(|| draw(1, max as i64) as u32);
        let times: Vec<Time> = ev.iter().map(|&t| Time::from_units(t)).collect();
        let got = check_variability(&times, Time::from_units(window), min, max).map_err(|e| e.to_string())?;
        let want = variability_oracle(&ev, window, min, max);
        ensure(got == want, || format!("events {ev:?} window {window} min {min:?} max {max}: {got} vs {want}"))?;
        accepted += got as usize;
    }
    Ok(format!(
        "1000 jitter and 1000 uncertain samples within their laws; 100 variability checks agree ({accepted} admitted)"
    ))
}
