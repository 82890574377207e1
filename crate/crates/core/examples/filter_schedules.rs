//! Removal order of every filter method on the bundled 12-activity log
//! with four chaotic activities inserted.
//!
//! cargo run --example filter_schedules

use chaosfilter::synthesis::{bundled, inject_chaos, simulate, ChaosInsertionSpec, ChaosMode};
use chaosfilter::{materialize, run_filter, FilterMethod};

fn main() -> chaosfilter::Result<()> {
    let log = simulate(&bundled::a12(), bundled::A12_TRACES, bundled::A12_SEED, 0.5)?;
    let noisy = inject_chaos(&log, &ChaosInsertionSpec::new(4, ChaosMode::Uniform, 3))?;
    println!("inserted: {:?}\n", noisy.inserted);

    for method in FilterMethod::all(7) {
        let schedule = run_filter(&noisy.log, method);
        let order: Vec<&str> = schedule.removed_names().collect();
        println!("{method:<26} {}", order.join(" "));
    }

    let schedule = run_filter(&noisy.log, FilterMethod::DirectEntropy { laplace: false });
    let cleaned = materialize(&noisy.log, &schedule, 4)?;
    println!("\nafter 4 direct-entropy removals: {}", cleaned.activity_names().join(" "));
    println!("\n{}", schedule.to_csv());
    Ok(())
}
