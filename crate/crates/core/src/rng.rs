//! Per-run random streams.
//!
//! Every run draws from ChaCha8 keyed by a splitmix64 mix of the campaign
//! seed and the run index, so a run can be replayed in isolation and runs can
//! execute in any order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Name of the stream algorithm, recorded in reports.
pub const ALGORITHM: &str = "chacha8/splitmix64";

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The stream of run `run_index` in a campaign seeded with `seed`.
pub fn run_stream(seed: u64, run_index: u64) -> Stream {
    let key = splitmix64(splitmix64(seed) ^ run_index.wrapping_mul(0xd605_bbb5_8c8a_bd9b));
    ChaCha8Rng::seed_from_u64(key)
}

/// Uniform real in `[0, 1)` from the 53 high bits of the next word.
pub fn unit(rng: &mut Stream) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw from `[lo, hi]` in ticks, rounded to the nearest tick.
pub fn uniform_ticks(rng: &mut Stream, lo: i64, hi: i64) -> i64 {
    debug_assert!(lo <= hi);
    if lo == hi {
        return lo;
    }
    let span = (hi - lo) as f64;
    (lo + (unit(rng) * span).round() as i64).min(hi)
}
