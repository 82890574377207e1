//! Per-activity entropies of a small log where `x` can happen anywhere.
//!
//! cargo run --example entropy_ranking

use chaosfilter::entropy::{EntropyReport, Smoothing};
use chaosfilter::EventLog;

fn main() -> chaosfilter::Result<()> {
    let log = EventLog::from_variants([
        (vec!["a", "b", "c", "x"], 10),
        (vec!["a", "b", "x", "c"], 10),
        (vec!["a", "x", "b", "c"], 10),
    ])?;

    for smoothing in [Smoothing::None, Smoothing::Adaptive] {
        let report = EntropyReport::for_log(&log, smoothing);
        println!("smoothing {smoothing:?} (alpha = {:.3})", report.alpha);
        let mut rows = report.rows.clone();
        rows.sort_by(|a, b| b.h_total.total_cmp(&a.h_total).then_with(|| a.activity.cmp(&b.activity)));
        println!("  {:<8} {:>7} {:>7} {:>7}", "activity", "H(dfr)", "H(dpr)", "H");
        for r in &rows {
            println!("  {:<8} {:>7.3} {:>7.3} {:>7.3}", r.activity, r.h_dfr, r.h_dpr, r.h_total);
        }
        println!("  log entropy {:.3}\n", report.total());
    }
    Ok(())
}
