//! Change-risk index for microservice systems.
//!
//! Observed traffic is aggregated into a [`Snapshot`](msp::Snapshot) of call
//! chains ("branches") grouped by the operation the entry-point calls
//! ("paths"). Given a set of operations about to break, [`risk`](risk::risk)
//! scores how much of that traffic is jeopardized, from 0 (nothing) to 1
//! (every user activity).

pub mod ingest;
pub mod msp;
pub mod risk;
pub mod sim;

pub use msp::{BranchKey, OperationId, Snapshot};
pub use risk::{risk, sweep_single_ops, BreakingSet, RiskMode, RiskReport};
