//! One simulated run printed as a timed trace, and the replay guarantee.
//!
//! ```text
//! cargo run --example simulate_trace [CONFIG] [SEED]
//! ```

use dse::{fixtures, parse_system, simulate};

fn main() {
    let mut args = std::env::args().skip(1);
    let m = match args.next() {
        Some(path) => parse_system(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => fixtures::stream3(),
    };
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed must be an integer"));
    let trace = simulate(&m, seed, 0).unwrap();
    print!("{}", trace.to_text());
    let again = simulate(&m, seed, 0).unwrap();
    println!("# replay identical: {}", again.to_text() == trace.to_text());
}
