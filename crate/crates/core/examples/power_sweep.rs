//! Power and performance over processor count and frequency, written as a
//! sweep output directory with a tradeoff table.
//!
//! ```text
//! cargo run --release --example power_sweep [OUTDIR]
//! ```

use dse::fixtures::{fixture_power_sweep, power_sweep_model};
use dse::runner;

fn main() {
    let outdir = std::env::args().nth(1).unwrap_or_else(|| "power-sweep-out".into());
    let spec = fixture_power_sweep(&outdir);
    let out = runner::run(&spec, &power_sweep_model()).unwrap_or_else(|e| panic!("{e}"));
    println!("{:>3} {:>5} {:>12} {:>10} {:>12}", "P", "f", "makespan", "power", "energy");
    for p in &out.points {
        let c = p.campaign().expect("sweep points are simulated");
        println!(
            "{:>3} {:>5} {:>12.1} {:>10.3} {:>12.1}",
            p.setting("platform.processor_count").unwrap(),
            p.setting("platform.frequency").unwrap(),
            c.mean("makespan").unwrap(),
            c.mean("power").unwrap(),
            c.mean("energy").unwrap()
        );
    }
    println!("\nwrote {}/tradeoff.csv", outdir);
}
