//! Exact makespan and latency bounds by zone-graph exploration.
//!
//! ```text
//! cargo run --release --example formal_bounds [CONFIG]
//! ```
//!
//! Without an argument the band fixture is analyzed at several processor
//! counts.

use dse::reachability::{build_network, reach_bounds_with};
use dse::{fixtures, parse_system, reach_bounds, ReachOptions};

fn main() {
    if let Some(path) = std::env::args().nth(1) {
        let m = parse_system(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
        let r = reach_bounds(&m).unwrap_or_else(|e| panic!("{e}"));
        println!("makespan {:?}", r.makespan.map(|b| b.to_string()));
        for l in &r.latency {
            println!("latency {} #{} {:?}", l.job, l.instance, l.bounds.map(|b| b.to_string()));
        }
        return;
    }

    let chain = fixtures::chain2();
    println!("chain [1,2] + [3,4]: makespan {}", reach_bounds(&chain).unwrap().makespan.unwrap());
    let indep = fixtures::indep2();
    println!("[1,3] || [2,4] on two processors: makespan {}", reach_bounds(&indep).unwrap().makespan.unwrap());

    for p in [1, 2, 4, 8, 16] {
        let m = fixtures::band16(p);
        let opts = ReachOptions::default();
        let net = build_network(&m, &opts).unwrap();
        let start = std::time::Instant::now();
        let r = reach_bounds_with(&m, &opts).unwrap();
        println!(
            "band16 P={p:<2} makespan {} ({} automata, <= {} clocks, {} states, {:?})",
            r.makespan.unwrap(),
            net.automata.len(),
            net.clock_estimate,
            r.visited,
            start.elapsed()
        );
    }

    let tight = ReachOptions { clock_budget: 10, ..Default::default() };
    match reach_bounds_with(&fixtures::band16(16), &tight) {
        Ok(_) => println!("unexpectedly within budget"),
        Err(e) => println!("with a budget of 10: {e}"),
    }
}
