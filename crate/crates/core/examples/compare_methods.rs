//! Ranks filter methods over several synthetic logs by winning number and
//! measures how similar two methods' activity rankings are.
//!
//! cargo run --release --example compare_methods

use chaosfilter::discovery::DiscoveryConfig;
use chaosfilter::evaluation::{
    explained_activity_curve, kendall_tau_b, ranks_from_order, value_at_threshold, winning_number, Averaging,
    RankMatrix,
};
use chaosfilter::synthesis::{bundled, inject_chaos, simulate, ChaosInsertionSpec, ChaosMode};
use chaosfilter::{run_filter, FilterMethod};

fn main() -> chaosfilter::Result<()> {
    let methods = FilterMethod::all(7);
    let logs: Vec<_> = (0..5u64)
        .map(|seed| {
            let log = simulate(&bundled::a12(), 25, seed, 0.5)?;
            Ok(inject_chaos(&log, &ChaosInsertionSpec::new(3, ChaosMode::Uniform, seed))?.log)
        })
        .collect::<chaosfilter::Result<_>>()?;

    let mut matrix = RankMatrix::new(
        methods.iter().map(|m| m.to_string()).collect(),
        (0..logs.len()).map(|i| format!("log{i}")).collect(),
    );
    for (j, log) in logs.iter().enumerate() {
        for m in &methods {
            let curve = explained_activity_curve(log, &run_filter(log, *m), DiscoveryConfig::default(), Averaging::PerTrace)?;
            if let Some(v) = value_at_threshold(&curve, 0.75) {
                matrix.set(&m.to_string(), &format!("log{j}"), v);
            }
        }
    }
    let wins = winning_number(&matrix)?;
    println!("winning numbers at 75% of activities kept:");
    for (m, (t, a)) in wins.methods.iter().zip(wins.totals.iter().zip(&wins.averages)) {
        println!("  {m:<26} {t:>3}  ({a:.2} per log)");
    }

    let direct = run_filter(&logs[0], FilterMethod::DirectEntropy { laplace: false }).full_ranking();
    let indirect = run_filter(&logs[0], FilterMethod::IndirectEntropy { laplace: false }).full_ranking();
    let (r1, r2) = ranks_from_order(&direct, &indirect)?;
    let tau = kendall_tau_b(&r1, &r2)?;
    println!(
        "\ndirect vs indirect ranking on log0: tau_b = {:.3}, p = {:.4}, reject at 0.05: {}",
        tau.tau_b, tau.p_value, tau.reject_at_05
    );
    Ok(())
}
