//! Detection and removal of chaotic activities in event logs.
//!
//! A chaotic activity can happen at any point of a process, so it blurs the
//! directly-follows structure that discovery algorithms rely on. This crate
//! ranks activities by the entropy of their direct-follow and
//! direct-precede distributions, removes them one at a time, and measures
//! how much the discovered model improves.
//!
//! ```
//! use chaosfilter::{EventLog, FilterMethod, run_filter};
//!
//! let log = EventLog::from_variants([
//!     (vec!["a", "b", "c"], 10),
//!     (vec!["a", "x", "b", "c"], 10),
//!     (vec!["x", "a", "b", "c"], 10),
//! ])
//! .unwrap();
//! let schedule = run_filter(&log, FilterMethod::DirectEntropy { laplace: false });
//! assert_eq!(schedule.removal_order[0].activity, "x");
//! ```

#![allow(clippy::needless_range_loop)]

pub mod discovery;
pub mod entropy;
pub mod error;
pub mod evaluation;
pub mod eventlog;
pub mod filters;
pub mod synthesis;
pub mod tree;


pub use discovery::{discover, DiscoveryConfig};
pub use entropy::{log_entropy, EntropyReport, Smoothing};
pub use error::{Error, Result};
pub use eventlog::{ActivityId, Alphabet, EventLog, LogBuilder, Trace};
pub use filters::{materialize, run_filter, FilterMethod, FilterSchedule};
pub use tree::ProcessTree;
