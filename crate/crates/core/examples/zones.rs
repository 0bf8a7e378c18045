//! Difference bound matrices: delay, reset, guards, inclusion and the
//! bounds of a single clock.
//!
//! ```text
//! cargo run --example zones
//! ```

use dse::{Bound, Dbm, Time};

fn main() {
    let t = |v| Time::from_units(v);
    // Two clocks, both zero.
    let mut z = Dbm::zero(2);
    z.up().unwrap();
    // Invariant x <= 5, then reset y and let time pass again.
    z.constrain(1, 0, Bound::le(t(5))).unwrap();
    z.reset(2).unwrap();
    z.up().unwrap();
    z.constrain(1, 0, Bound::le(t(8))).unwrap();
    println!("{}", z.dump(&["x", "y"]));
    println!("x in {}", z.clock_bounds(1).unwrap());
    println!("y in {}", z.clock_bounds(2).unwrap());
    println!("x - y in {}", z.difference_bounds(1, 2).unwrap());

    // Guard y >= 4 keeps a smaller zone.
    let mut g = z.clone();
    g.constrain(0, 2, Bound::le(Time::ZERO - t(4))).unwrap();
    println!("guarded zone included in the original: {}", z.includes(&g).unwrap());
    println!("original included in the guarded zone: {}", g.includes(&z).unwrap());

    // A contradictory guard empties it.
    let mut e = g.clone();
    let feasible = e.constrain(2, 0, Bound::lt(t(4))).unwrap();
    println!("y < 4 after y >= 4 feasible: {feasible}, empty: {}", e.is_empty().unwrap());
}
