//! Example workloads: built-in fixtures, synthetic topologies and trace
//! streams, and the brute-force risk oracle used to check the engine.

mod fixtures;
mod oracle;
mod topology;

pub use fixtures::{builtin_fixture, FixtureId};
pub use oracle::oracle_risk;
pub use topology::{
    generate_traces, random_breaking_set, random_snapshot, PathTemplate, RandomBounds, TopologySpec,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("unknown fixture {0:?} (expected one of mce0, mce1, mce2, p3-sample)")]
    UnknownFixture(String),
    #[error("invalid topology: {0}")]
    Template(String),
    #[error("malformed topology document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Msp(#[from] crate::msp::MspError),
    #[error("{0}")]
    Io(String),
}
