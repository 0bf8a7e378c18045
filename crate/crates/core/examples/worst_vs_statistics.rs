//! Worst case versus statistics for one band of 16 blocks: formal makespan
//! bounds next to the simulated distribution at each processor count.
//!
//! ```text
//! cargo run --release --example worst_vs_statistics [RUNS]
//! ```

use dse::fixtures::{band16, BAND_MU};
use dse::metrics::Report;
use dse::{reach_bounds, run_campaign};

fn main() {
    let runs: u32 = std::env::args().nth(1).map_or(1000, |s| s.parse().expect("runs must be an integer"));
    println!("{:>3} {:>24} {:>9} {:>8} {:>9} {:>9}  mean position", "P", "formal bounds", "mean", "std", "min", "max");
    for p in [1, 2, 4, 8, 16] {
        let m = band16(p);
        let bounds = reach_bounds(&m).unwrap().makespan.unwrap();
        let c = run_campaign(&m, runs, 2012).unwrap();
        let Some(Report::Summary(s)) = c.report("makespan") else { unreachable!("makespan always has values") };
        let (lo, hi) = (bounds.lo.as_f64(), bounds.hi.as_f64());
        println!(
            "{p:>3} {:>24} {:>9.2} {:>8.2} {:>9.2} {:>9.2}  {:.0}%",
            format!("[{lo:.2}, {hi:.2}]"),
            s.mean,
            s.std,
            s.min,
            s.max,
            100.0 * (s.mean - lo) / (hi - lo)
        );
    }
    println!("\n16 blocks on one processor: expected mean near {:.0}", 16.0 * BAND_MU);
    println!("16 blocks on 16 processors: expected mean near {:.2}", BAND_MU * (0.82 + 16.0 / 17.0 * 0.36));
}
