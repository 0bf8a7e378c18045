//! Reading the image in 16-block bands versus block by block, for a 256-block
//! image on 1 to 16 processors.
//!
//! ```text
//! cargo run --release --example reading_granularity [RUNS]
//! ```

use dse::fixtures::{band_copies, blockwise, GRANULARITY};
use dse::{reach_bounds, run_campaign};

fn main() {
    let runs: u32 = std::env::args().nth(1).map_or(100, |s| s.parse().expect("runs must be an integer"));
    let s = &GRANULARITY;
    println!("{:>3} {:>12} {:>12} {:>8}", "P", "band mean", "block mean", "speedup");
    for p in [1, 2, 4, 8, 16] {
        let band = run_campaign(&band_copies(p, 16, s), runs, 5).unwrap().mean("makespan").unwrap();
        let block = run_campaign(&blockwise(p, 16, s), runs, 5).unwrap().mean("makespan").unwrap();
        println!("{p:>3} {band:>12.2} {block:>12.2} {:>8.3}", band / block);
    }

    let band = reach_bounds(&band_copies(1, 1, s)).unwrap().makespan.unwrap();
    let block = reach_bounds(&blockwise(1, 1, s)).unwrap().makespan.unwrap();
    println!("\none band on one processor: band {band}, blockwise {block}");
}
