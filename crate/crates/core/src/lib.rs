//! Online submodular maximization with shortlists under random arrival order.
//!
//! The crate provides value oracles ([`oracle`]), instance and arrival generation
//! ([`instance`]), the (α, β) window construction ([`windows`]), the online max tracker
//! ([`online_max`]), the k-secretary selection algorithm ([`secretary`]) and its
//! bounded-buffer variant ([`streaming`]), offline baselines ([`baselines`]) and a batch
//! experiment harness ([`harness`]).

pub mod baselines;
pub mod error;
pub mod exec;
pub mod harness;
pub mod instance;
pub mod online_max;
pub mod oracle;
pub mod secretary;
pub mod streaming;
pub mod windows;

pub use error::{Error, Result};
pub use exec::Execution;
pub use instance::{gen_instance, sample_arrival, ArrivalOrder, InstanceSpec};
pub use online_max::MaxTracker;
pub use oracle::{ItemId, ValueOracle};
pub use secretary::{run, run_with_layout, RunParams, RunResult};
pub use streaming::run_streaming;
pub use windows::{sample_layout, WindowLayout};
