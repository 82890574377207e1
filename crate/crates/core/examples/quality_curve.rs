//! Nondeterminism of the discovered model as activities are removed, for
//! the direct-entropy filter and the least-frequent-first baseline.
//!
//! cargo run --release --example quality_curve

use chaosfilter::discovery::{discover, DiscoveryConfig};
use chaosfilter::evaluation::{curve_to_csv, explained_activity_curve, replay_nondeterminism, Averaging};
use chaosfilter::synthesis::{bundled, inject_chaos, simulate, ChaosInsertionSpec, ChaosMode};
use chaosfilter::{run_filter, FilterMethod};

fn main() -> chaosfilter::Result<()> {
    let log = simulate(&bundled::a12(), bundled::A12_TRACES, bundled::A12_SEED, 0.5)?;
    let cfg = DiscoveryConfig::default();
    let clean = replay_nondeterminism(&discover(&log, cfg), &log, Averaging::PerTrace);
    eprintln!("chaos-free nondeterminism: {:?}", clean.nondeterminism);

    let noisy = inject_chaos(&log, &ChaosInsertionSpec::new(4, ChaosMode::Uniform, 11))?.log;
    let mut records = Vec::new();
    for method in [FilterMethod::DirectEntropy { laplace: false }, FilterMethod::LeastFrequentFirst] {
        let schedule = run_filter(&noisy, method);
        records.extend(explained_activity_curve(&noisy, &schedule, cfg, Averaging::PerTrace)?);
    }
    print!("{}", curve_to_csv(&records));
    Ok(())
}
