use serde::Serialize;

use super::{PathId, Snapshot};

/// A snapshot laid out for drawing the call graph: every branch is one edge
/// from its caller service to the supplier of its last operation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnapshotSummary {
    pub entry_label: String,
    pub grand_total: u64,
    pub services: Vec<String>,
    pub operations: Vec<String>,
    pub paths: Vec<PathSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathSummary {
    pub id: PathId,
    pub root: String,
    pub weight: u64,
    pub branches: Vec<BranchSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchSummary {
    pub key: String,
    pub count: u64,
    pub caller: String,
    pub callee: String,
    pub operation: String,
}

impl Snapshot {
    pub fn summary(&self) -> SnapshotSummary {
        SnapshotSummary {
            entry_label: self.entry_label().to_owned(),
            grand_total: self.grand_total(),
            services: self.services().into_iter().collect(),
            operations: self
                .operations()
                .into_iter()
                .map(|op| op.label().to_owned())
                .collect(),
            paths: self
                .paths()
                .iter()
                .map(|p| PathSummary {
                    id: p.id(),
                    root: p.root().label().to_owned(),
                    weight: p.weight(),
                    branches: p
                        .branches()
                        .map(|(key, count)| BranchSummary {
                            key: key.to_string(),
                            count,
                            caller: key.caller(self.entry_label()).to_owned(),
                            callee: key.last().service().to_owned(),
                            operation: key.last().label().to_owned(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}
