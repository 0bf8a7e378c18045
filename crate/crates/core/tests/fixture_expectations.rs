//! The expectations listed in the fixture catalog that are not already
//! acceptance criteria.

use dse::fixtures::{self, band16, band_copies, blockwise, GRANULARITY};
use dse::generators;
use dse::model::comm_duration;
use dse::rng::run_stream;
use dse::scheduler::TaskRef;
use dse::simulator::{DurationSource, EventKind, Simulator};
use dse::{reach_bounds, run_campaign, Generator, GeneratorError, Time, TimeInterval, TimedTrace, Volume};

/// Picks each duration from a fixed list of grid positions, in start order.
struct Grid {
    picks: Vec<u32>,
    steps: u32,
    next: usize,
}

impl DurationSource for Grid {
    fn arrivals(&mut self, _gen: usize, g: &Generator) -> Result<Vec<Time>, GeneratorError> {
        generators::arrivals(g, &mut run_stream(0, 0))
    }

    fn duration(&mut self, _task: TaskRef, w: TimeInterval) -> Time {
        let k = self.picks[self.next] as i64;
        self.next += 1;
        Time::from_ticks(w.lo.ticks() + (w.hi - w.lo).ticks() * k / self.steps as i64)
    }
}

fn makespan(trace: &TimedTrace) -> Time {
    let first = trace.events.iter().find(|e| matches!(e.kind, EventKind::Arrival { .. })).unwrap().time;
    trace.last_time() - first
}

#[test]
fn diamond_bounds_are_tight_over_the_duration_grid() {
    let m = fixtures::diamond();
    let bounds = reach_bounds(&m).unwrap().makespan.unwrap();
    assert_eq!(bounds, TimeInterval::units(4.0, 8.0));
    let sim = Simulator::new(&m).unwrap();
    let steps = 4u32;
    let (mut lo, mut hi) = (Time::INFINITY, Time::ZERO);
    for code in 0..(steps + 1).pow(4) {
        let picks = (0..4).map(|i| code / (steps + 1).pow(i) % (steps + 1)).collect();
        let trace = sim.run_with(&mut Grid { picks, steps, next: 0 }, 0, 0).unwrap();
        let ms = makespan(&trace);
        assert!(bounds.contains(ms), "{ms} outside {bounds}");
        lo = lo.min(ms);
        hi = hi.max(ms);
    }
    assert_eq!(TimeInterval { lo, hi }, bounds);
}

#[test]
fn two_speed_chain_stays_on_the_slow_processor() {
    let m = fixtures::two_speed_chain();
    for run in 0..20 {
        let trace = dse::simulate(&m, 3, run).unwrap();
        let starts: Vec<(&str, &str)> = trace
            .events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Start { task, resource, .. } => Some((task.as_str(), resource.as_str())),
                _ => None,
            })
            .collect();
        assert_eq!(starts, vec![("T1", "slow"), ("T2", "slow")]);
    }
    let r = reach_bounds(&m).unwrap();
    assert_eq!(r.makespan, Some(TimeInterval::units(6.0, 14.0)));
}

#[test]
fn strict_pair_low_priority_never_overtakes() {
    let m = fixtures::strict_pair();
    for run in 0..200 {
        let trace = dse::simulate(&m, 9, run).unwrap();
        for instance in 1..=2 {
            let end = |name: &str| {
                trace.events.iter().find_map(|e| match &e.kind {
                    EventKind::End { instance: i, task, .. } if *i == instance && task == name => Some(e.time),
                    _ => None,
                })
            };
            if let (Some(hi), Some(lo)) = (end("hi"), end("lo")) {
                assert!(hi <= lo, "run {run} instance {instance}: hi {hi} after lo {lo}");
            }
        }
    }
}

#[test]
fn band_mean_is_near_the_upper_bound_with_one_processor_per_block() {
    let m = band16(16);
    let b = reach_bounds(&m).unwrap().makespan.unwrap();
    let mean = run_campaign(&m, 1000, 21).unwrap().mean("makespan").unwrap();
    let position = (mean - b.lo.as_f64()) / (b.hi - b.lo).as_f64();
    assert!(position > 0.9, "mean at {:.0}% of the bound range", 100.0 * position);
}

#[test]
fn band_distribution_is_symmetric_on_one_processor() {
    let c = run_campaign(&band16(1), 1000, 21).unwrap();
    let values: Vec<f64> = c.runs.iter().map(|r| r.values[0][0]).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    assert!(skew.abs() < 0.2, "skewness {skew}");
    let s = c.report("makespan").unwrap().summary().unwrap();
    assert!((s.mean - s.median).abs() < 0.1 * s.std, "mean {} median {}", s.mean, s.median);
}

#[test]
fn reading_block_by_block_pays_off_and_grows_with_processors() {
    let mut speedups = Vec::new();
    for p in [1, 2, 4, 8, 16] {
        let band = run_campaign(&band_copies(p, 16, &GRANULARITY), 60, 13).unwrap().mean("makespan").unwrap();
        let block = run_campaign(&blockwise(p, 16, &GRANULARITY), 60, 13).unwrap().mean("makespan").unwrap();
        if [2, 4, 8].contains(&p) {
            assert!(block <= band, "P={p}: blockwise {block} > band {band}");
        }
        speedups.push(band / block);
    }
    assert!(speedups.windows(2).all(|w| w[1] > w[0]), "{speedups:?}");
}

#[test]
fn one_processor_upper_bounds_differ_by_less_than_a_band_read() {
    let band = reach_bounds(&band_copies(1, 1, &GRANULARITY)).unwrap().makespan.unwrap();
    let block = reach_bounds(&blockwise(1, 1, &GRANULARITY)).unwrap().makespan.unwrap();
    let dma = &band_copies(1, 1, &GRANULARITY).platform.interconnects[0];
    let read = comm_duration(Volume::from_f64(16.0 * GRANULARITY.block_volume), dma).hi;
    let gap = if band.hi > block.hi { band.hi - block.hi } else { block.hi - band.hi };
    assert!(gap <= read, "upper bounds {} and {} differ by more than {read}", band.hi, block.hi);
}
