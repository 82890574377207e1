//! Inserts k chaotic activities in three modes and counts how many original
//! activities each filter removes before all chaotic ones are gone.
//!
//! cargo run --release --example chaos_experiment [seed]

use chaosfilter::synthesis::{bundled, chaos_table_csv, evaluate_chaos, simulate, ChaosMode};
use chaosfilter::FilterMethod;

fn main() -> chaosfilter::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(bundled::A12_CHAOS_SEED);
    let log = simulate(&bundled::a12(), bundled::A12_TRACES, bundled::A12_SEED, 0.5)?;
    let cells = evaluate_chaos(&log, &[1, 2, 4, 8], &ChaosMode::ALL, &FilterMethod::all(7), seed)?;
    print!("{}", chaos_table_csv(&cells));
    Ok(())
}
