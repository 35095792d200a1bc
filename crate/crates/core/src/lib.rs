//! Delay simulation and analysis for erasure-coded file delivery from a
//! cluster of servers.
//!
//! Each request for a file coded into `k` blocks is served by `k` of the
//! servers holding its blocks. A delivery policy decides how many blocks
//! each server sends; the file is complete when the slowest server is done.

pub mod analytics;
pub mod dist;
pub mod engine;
mod error;
pub mod order;
pub mod placement;
pub mod policy;
pub mod stats;
pub mod types;

#[cfg(feature = "cli")]
pub mod cli;

pub use dist::{CodingRule, FileSizeDistribution, SizeLaw};
pub use engine::{run, run_policy, DelayRecord, ExperimentConfig, PolicyRun, RunOutput, RunSummary};
pub use error::{Error, Result};
pub use policy::PolicyKind;
pub use types::{ChunkLaw, PlacementVector, RoutingVector, SystemParams, WorkloadVector};
