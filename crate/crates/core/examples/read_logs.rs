//! Reading and writing logs in XES, CSV and the compact variant format.
//!
//! cargo run --example read_logs

use chaosfilter::eventlog::csv::{self, CsvColumns};
use chaosfilter::eventlog::{text, xes};
use chaosfilter::EventLog;

fn main() -> chaosfilter::Result<()> {
    let table = "case,activity,time\n\
                 1,register,1\n1,check,2\n1,pay,3\n\
                 2,register,1\n2,pay,3\n2,check,2\n\
                 3,register,1\n3,pay,2\n";
    let log = csv::read(table.as_bytes(), &CsvColumns::default().ordered_by("time"))?;
    println!("from CSV:\n{}", text::to_string(&log));

    let xml = xes::to_string(&log);
    let back = xes::parse_bytes(xml.as_bytes(), xes::XesOptions::default())?;
    assert_eq!(back.log, log);
    println!("XES round trip ok ({} bytes), digest {}", xml.len(), &log.digest()[..12]);

    let compact: EventLog = text::parse("3×register,check,pay\n1×register,pay\n")?;
    println!("variant format: {} traces, {} variants", compact.num_traces(), compact.num_variants());
    for (activity, count) in compact.frequencies() {
        println!("  {activity}: {count}");
    }
    Ok(())
}
