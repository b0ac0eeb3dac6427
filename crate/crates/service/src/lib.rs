//! Runs Thea sessions: wires the rule engines, control loop, simulated
//! devices and links into one discrete-event host, writes the session logs,
//! folds them into statistics and serves the command API and live stream.

pub mod api;
pub mod config;
pub mod error;
pub mod host;
pub mod log;
pub mod registry;
pub mod replay;
pub mod stats;
pub mod store;

pub use config::{Assignment, ServiceConfig, SessionConfig};
pub use error::ServiceError;
pub use host::{run_script, virtual_header, SessionHost};
