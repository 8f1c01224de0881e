//! The Microservice Path database (MSP): operations, branch keys, paths and
//! snapshots of observed request counts.

mod file;
mod op;
mod snapshot;
mod summary;

pub use file::MSP_FORMAT_VERSION;
pub use op::{caller_of, BranchKey, OpRegistry, OperationId, ALT_KEY_SEPARATOR, KEY_SEPARATOR};
pub use snapshot::{BranchEntry, BuildWarning, Path, PathId, Snapshot, DEFAULT_ENTRY_LABEL};
pub use summary::{BranchSummary, PathSummary, SnapshotSummary};

#[derive(Debug, thiserror::Error)]
pub enum MspError {
    #[error("operation label is empty")]
    EmptyLabel,
    #[error("operation label {0:?} contains a key separator")]
    SeparatorInLabel(String),
    #[error("invalid operation label {0:?}")]
    InvalidLabel(String),
    #[error("invalid entry label {0:?}")]
    InvalidEntryLabel(String),
    #[error("branch key is empty")]
    EmptyKey,
    #[error("empty segment in branch key {0:?}")]
    EmptySegment(String),
    #[error("operation {0} repeats within one branch key")]
    LoopInKey(String),
    #[error("unknown operation {0}")]
    UnknownOperation(String),
    #[error("path id {0} is not positive")]
    InvalidPathId(PathId),
    #[error("path {0} has no branches")]
    EmptyPath(PathId),
    #[error("paths {first} and {second} share root {root}")]
    DuplicateRoot {
        root: String,
        first: PathId,
        second: PathId,
    },
    #[error("branch {key} listed twice in path {path}")]
    DuplicateKey { path: PathId, key: String },
    #[error("path {path} mixes roots {expected} and {found}")]
    RootMismatch {
        path: PathId,
        expected: String,
        found: String,
    },
    #[error("negative count for branch {key} in path {path}")]
    NegativeCount { path: PathId, key: String },
    #[error("count for branch {key} in path {path} is not a nonnegative integer")]
    InvalidCount { path: PathId, key: String },
    #[error("request count overflow")]
    CountOverflow,
    #[error("coefficient undefined: snapshot has no requests")]
    UndefinedCoefficient,
    #[error("entry labels differ: {0} vs {1}")]
    EntryLabelMismatch(String, String),
    #[error("unsupported MSP format version {0}")]
    UnsupportedVersion(u64),
    #[error("malformed MSP document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
