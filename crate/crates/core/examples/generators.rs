//! Arrival windows, sampled arrivals, and the window-count check used for
//! the variability-bounded generator kinds.
//!
//! ```text
//! cargo run --example generators
//! ```

use dse::generators::{arrival_window, check_variability, sample_arrivals};
use dse::rng::run_stream;
use dse::{Generator, GeneratorKind, Time};

fn show(times: &[Time]) -> String {
    times.iter().map(|t| format!("{:.2}", t.as_f64())).collect::<Vec<_>>().join(" ")
}

fn main() {
    let d = Time::from_units(10);
    let j = Time::from_units(3);
    let kinds = [
        GeneratorKind::Periodic { period: d },
        GeneratorKind::Jitter { period: d, jitter: j },
        GeneratorKind::Uncertain { period: d, jitter: j },
    ];
    for kind in kinds {
        let g = Generator::new("J", 6, kind);
        let mut rng = run_stream(42, 0);
        let times = sample_arrivals(&g, &mut rng).unwrap();
        println!("{:<10} {}", g.kind.name(), show(&times));
        let mut prev = Time::ZERO;
        let windows: Vec<String> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let w = arrival_window(&g, i as u32 + 1, prev).unwrap();
                prev = t;
                w.to_string()
            })
            .collect();
        println!("{:<10} {}", "", windows.join(" "));
    }

    let burst: Vec<Time> = [0, 1, 2, 10, 11, 30].map(Time::from_units).to_vec();
    let window = Time::from_units(5);
    println!("events {}", show(&burst));
    for max in [2, 3] {
        println!("at most {max} per window of 5: {}", check_variability(&burst, window, None, max).unwrap());
    }
    println!("between 1 and 3 per window of 5: {}", check_variability(&burst, window, Some(1), 3).unwrap());

    let bounded = Generator::new("J", 6, GeneratorKind::BoundedVariability { window, max: 3 });
    println!("bounded_variability admits the burst: {}", bounded.admits(&burst));
    println!("sampling it: {}", sample_arrivals(&bounded, &mut run_stream(0, 0)).unwrap_err());
}
