//! Deterministic discrete-event simulator of multipath TCP data transfer
//! over satellite-terrestrial integrated networks.
//!
//! The crate is organized around six subsystems:
//!
//! - [`engine`]: simulation clock, ordered event queue, seeded randomness
//! - [`linkmodel`]: per-path delay/bandwidth/loss truth and handover events
//! - [`transport`]: per-subflow reliable transport plus the connection level
//!   (send buffer, scheduler invocation, receiver reorder buffer)
//! - [`schedulers`]: the scheduler interface and five implementations
//!   (adaptive latency compensation, min-RTT, round-robin, BLEST, ECF)
//! - [`metrics`]: run statistics, retransmission classification, digests
//! - [`harness`]: scenario configuration, presets, sweeps
//!
//! A single transfer is driven by [`transport::Simulation`]; batch
//! experiments go through [`harness::run_experiment`].

pub mod engine;
pub mod harness;
pub mod linkmodel;
pub mod metrics;
pub mod schedulers;
pub mod transport;

pub use engine::{RngStream, SimTime};
pub use harness::ScenarioConfig;
pub use metrics::RunMetrics;
