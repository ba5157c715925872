//! Adaptive multi-level bandwidth-allocation call admission control.
//!
//! Two routes to the same performance figures for a single cell carrying a
//! mix of real-time and elastic service classes:
//!
//! * [`chain`] — a closed-form birth-death model giving new-call blocking,
//!   handover dropping and bandwidth utilization for four admission schemes;
//! * [`sim`] — a discrete-event simulator of the same cell, used to
//!   cross-validate the chain.
//!
//! [`oracle`] holds independent verification backends (a direct stationary
//! solver and the Erlang-B recursion), [`scenario`] the config/sweep/CSV
//! plumbing, and [`reference`] the bundled seven-class reference setup.
//!
//! The analytic modules are generic over the scalar type; the aliases below
//! fix `f64`, which is what the simulator and CLI use.

pub mod chain;
pub mod oracle;
pub mod reference;
pub mod scalar;
pub mod scenario;
pub mod sim;
pub mod traffic;

pub use chain::{ChainError, SchemePolicy};
pub use scalar::Scalar;
pub use sim::{SimConfig, SimStats};

/// Traffic class over `f64`.
pub type TrafficClass = traffic::TrafficClass<f64>;
/// Traffic mix over `f64`.
pub type TrafficMix = traffic::TrafficMix<f64>;
/// Cell parameters over `f64`.
pub type CellParameters = traffic::CellParameters<f64>;
/// Mix aggregates over `f64`.
pub type MixAggregates = traffic::MixAggregates<f64>;
/// Chain model over `f64`.
pub type ChainModel = chain::ChainModel<f64>;
/// Chain results over `f64`.
pub type ChainResults = chain::ChainResults<f64>;
/// Birth-death spec over `f64`.
pub type BirthDeathSpec = oracle::BirthDeathSpec<f64>;
