//! Discovers a process tree from a log and prints its directly-follows graph.
//!
//! cargo run --example discover_model [path/to/log.xes]

use chaosfilter::discovery::{build_dfg, discover, DiscoveryConfig};
use chaosfilter::eventlog::xes::{self, XesOptions};
use chaosfilter::synthesis::{bundled, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = match std::env::args().nth(1) {
        Some(path) => xes::read(std::fs::File::open(path)?, XesOptions::default())?.log,
        None => simulate(&bundled::a12(), 200, 1, 0.5)?,
    };
    println!("{} traces, {} variants", log.num_traces(), log.num_variants());

    let dfg = build_dfg(&log);
    for edge in dfg.to_document().edges {
        println!("  {} -> {} ({})", edge.source, edge.target, edge.count);
    }

    println!("\nmodel:           {}", discover(&log, DiscoveryConfig::default()));
    println!("filtered (0.2):  {}", discover(&log, DiscoveryConfig::filtered(0.2)));
    Ok(())
}
