//! A stream of frames with highly variable task durations, deployed with a
//! fixed mapping (four tasks per processor) or a global queue.
//!
//! ```text
//! cargo run --release --example fixed_vs_flexible [RUNS]
//! ```

use dse::fixtures::{mapping_stream, STREAM_COUNT};
use dse::model::Policy;
use dse::runner::mean_latency;
use dse::{reach_bounds, run_campaign};

fn main() {
    let runs: u32 = std::env::args().nth(1).map_or(100, |s| s.parse().expect("runs must be an integer"));
    let single = reach_bounds(&mapping_stream(Policy::FifoLocal, 7000.0, 1)).unwrap();
    println!("single frame, fixed mapping: latency {}", single.latency[0].bounds.unwrap());

    println!("\n{:>6} {:>12} {:>12} {:>10} {:>16}", "period", "fixed", "global", "advantage", "overflow runs");
    for period in [7000.0, 6000.0, 5000.0, 4500.0, 4000.0] {
        let fixed = run_campaign(&mapping_stream(Policy::FifoLocal, period, STREAM_COUNT), runs, 1).unwrap();
        let global = run_campaign(&mapping_stream(Policy::FifoGlobal, period, STREAM_COUNT), runs, 1).unwrap();
        let (f, g) = (mean_latency(&fixed).unwrap(), mean_latency(&global).unwrap());
        println!(
            "{period:>6} {f:>12.1} {g:>12.1} {:>10.1} {:>16}",
            f - g,
            format!("{} / {}", fixed.runs_with_overflow, global.runs_with_overflow)
        );
    }
}
