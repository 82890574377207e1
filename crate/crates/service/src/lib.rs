//! HTTP service and command line for the `chaosfilter` library.
//!
//! The service backs an interactive workflow: upload a log, look at its
//! activities ranked by a filter, toggle activities off, and rediscover the
//! model on what is left. See [`api`] for the endpoints and [`cli`] for the
//! `chaosfilter` binary.

pub mod api;
pub mod cli;
pub mod error;
pub mod ops;
pub mod session;

pub use api::{router, serve, AppState, ServiceConfig};
pub use error::{Result, ServiceError};
pub use session::{Session, SessionDocument, SessionStore};
