//! Risk of a set of breaking operations over a snapshot.
//!
//! Two modes are available:
//!
//! * [`RiskMode::Literal`] walks every path, every breaking operation and
//!   every branch, adding for each branch that contains the operation
//!   `Σ_i req(prefix_i) / req(caller_i) × c(caller_i)`, where
//!   `c(ms) = req(ms) / req(MSP)`. The raw sum can exceed 1 because a branch
//!   is counted once per matching operation and prefix counts recur across
//!   sibling branches, so the total is clamped to 1.
//! * [`RiskMode::AffectedPaths`] (default) is the fraction of all observed
//!   requests that belong to a path containing at least one breaking
//!   operation.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::msp::{BranchKey, MspError, OperationId, PathId, Snapshot};

pub use report::{render_score, BranchContribution, PathContribution, RiskReport, SweepEntry};

#[derive(Debug, thiserror::Error)]
pub enum RiskError {
    #[error("snapshot has no requests; risk is undefined")]
    EmptySnapshot,
    #[error("branch {0} is not in the snapshot")]
    UnknownBranch(String),
    #[error("unknown risk mode {0:?} (expected \"literal\" or \"affected-paths\")")]
    UnknownMode(String),
    #[error(transparent)]
    Msp(#[from] MspError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMode {
    Literal,
    #[default]
    AffectedPaths,
}

impl RiskMode {
    pub const ALL: [RiskMode; 2] = [RiskMode::Literal, RiskMode::AffectedPaths];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskMode::Literal => "literal",
            RiskMode::AffectedPaths => "affected-paths",
        }
    }
}

impl fmt::Display for RiskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskMode {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(RiskMode::Literal),
            "affected-paths" => Ok(RiskMode::AffectedPaths),
            other => Err(RiskError::UnknownMode(other.to_owned())),
        }
    }
}

/// The operations declared breaking. Duplicates collapse.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BreakingSet(BTreeSet<OperationId>);

impl BreakingSet {
    pub fn new<I: IntoIterator<Item = OperationId>>(ops: I) -> Self {
        Self(ops.into_iter().collect())
    }

    pub fn from_labels<I, S>(labels: I) -> Result<Self, MspError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        labels
            .into_iter()
            .map(|l| OperationId::new(l.as_ref()))
            .collect::<Result<BTreeSet<_>, _>>()
            .map(Self)
    }

    /// Parses a comma-separated label list; blank items are ignored.
    pub fn parse_list(text: &str) -> Result<Self, MspError> {
        Self::from_labels(text.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &OperationId> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, op: &OperationId) -> bool {
        self.0.contains(op)
    }

    pub fn insert(&mut self, op: OperationId) -> bool {
        self.0.insert(op)
    }

    pub fn remove(&mut self, op: &OperationId) -> bool {
        self.0.remove(op)
    }

    pub fn is_subset(&self, other: &BreakingSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<OperationId> for BreakingSet {
    fn from_iter<T: IntoIterator<Item = OperationId>>(iter: T) -> Self {
        Self::new(iter)
    }
}

pub fn branch_contains(t: &BranchKey, o: &OperationId) -> bool {
    t.contains(o)
}

fn require_requests(snapshot: &Snapshot) -> Result<f64, RiskError> {
    match snapshot.grand_total() {
        0 => Err(RiskError::EmptySnapshot),
        n => Ok(n as f64),
    }
}

/// Literal risk of one branch: the weighted sum over every prefix of `t`.
///
/// Debug builds also evaluate the simplified form `Σ_i req(prefix_i) / req(MSP)`
/// and assert both agree.
pub fn risk_branch_literal(snapshot: &Snapshot, t: &BranchKey) -> Result<f64, RiskError> {
    let grand_total = require_requests(snapshot)?;
    let entry = snapshot.entry_label();
    let mut steps = Vec::with_capacity(t.len());
    for n in 1..=t.len() {
        let prefix = t.prefix(n).expect("prefix length within key");
        let count = snapshot
            .count(&prefix)
            .ok_or_else(|| RiskError::UnknownBranch(prefix.to_string()))?;
        steps.push((snapshot.caller_total(prefix.caller(entry)), count));
    }
    let mut weighted = 0.0;
    for &(caller_total, count) in &steps {
        // caller_total >= count, so a zero total means a zero numerator
        if caller_total > 0 {
            let coefficient = caller_total as f64 / grand_total;
            weighted += count as f64 / caller_total as f64 * coefficient;
        }
    }
    debug_assert!(
        (weighted
            - steps
                .iter()
                .map(|&(_, c)| c as f64 / grand_total)
                .sum::<f64>())
        .abs()
            <= 1e-12,
        "literal forms disagree for {t}"
    );
    Ok(weighted)
}

fn unmatched(snapshot: &Snapshot, s: &BreakingSet) -> Vec<OperationId> {
    let present = snapshot.operations();
    s.iter()
        .filter(|o| !present.contains(*o))
        .cloned()
        .collect()
}

/// Faithful triple loop over paths, breaking operations and branches.
pub fn risk_literal(snapshot: &Snapshot, s: &BreakingSet) -> Result<RiskReport, RiskError> {
    require_requests(snapshot)?;
    let mut raw_total = 0.0;
    let mut per_path = Vec::new();
    let mut per_branch = Vec::new();
    let mut branch_risk: BTreeMap<&BranchKey, f64> = BTreeMap::new();
    for p in snapshot.paths() {
        let mut path_total = 0.0;
        let mut hit = false;
        for o in s.iter() {
            for (t, _) in p.branches() {
                if branch_contains(t, o) {
                    let r = match branch_risk.get(t) {
                        Some(&r) => r,
                        None => {
                            let r = risk_branch_literal(snapshot, t)?;
                            branch_risk.insert(t, r);
                            r
                        }
                    };
                    raw_total += r;
                    path_total += r;
                    hit = true;
                    per_branch.push(BranchContribution {
                        branch: t.to_string(),
                        operation: Some(o.label().to_owned()),
                        contribution: r,
                    });
                }
            }
        }
        if hit {
            per_path.push(PathContribution {
                path: p.id(),
                contribution: path_total,
            });
        }
    }
    let clamped = raw_total > 1.0;
    Ok(RiskReport {
        mode: RiskMode::Literal,
        total: raw_total.min(1.0),
        raw_total,
        clamped,
        per_path,
        per_branch,
        unmatched: unmatched(snapshot, s),
    })
}

/// Ids of paths with at least one branch containing a breaking operation.
pub fn affected_paths(snapshot: &Snapshot, s: &BreakingSet) -> BTreeSet<PathId> {
    snapshot
        .paths()
        .iter()
        .filter(|p| {
            p.branches()
                .any(|(t, _)| s.iter().any(|o| branch_contains(t, o)))
        })
        .map(|p| p.id())
        .collect()
}

/// Fraction of all requests that belong to an affected path.
pub fn risk_affected_paths(snapshot: &Snapshot, s: &BreakingSet) -> Result<RiskReport, RiskError> {
    let grand_total = require_requests(snapshot)?;
    let affected = affected_paths(snapshot, s);
    let mut affected_requests: u64 = 0;
    let mut per_path = Vec::with_capacity(affected.len());
    let mut per_branch = Vec::new();
    for p in snapshot
        .paths()
        .iter()
        .filter(|p| affected.contains(&p.id()))
    {
        affected_requests += p.weight();
        per_path.push(PathContribution {
            path: p.id(),
            contribution: p.weight() as f64 / grand_total,
        });
        per_branch.extend(p.branches().map(|(t, count)| BranchContribution {
            branch: t.to_string(),
            operation: None,
            contribution: count as f64 / grand_total,
        }));
    }
    // integer numerator: a fully affected snapshot gives exactly 1.0
    let total = affected_requests as f64 / grand_total;
    Ok(RiskReport {
        mode: RiskMode::AffectedPaths,
        total,
        raw_total: total,
        clamped: false,
        per_path,
        per_branch,
        unmatched: unmatched(snapshot, s),
    })
}

pub fn risk(snapshot: &Snapshot, s: &BreakingSet, mode: RiskMode) -> Result<RiskReport, RiskError> {
    match mode {
        RiskMode::Literal => risk_literal(snapshot, s),
        RiskMode::AffectedPaths => risk_affected_paths(snapshot, s),
    }
}

/// Scores every operation seen in the snapshot on its own, highest first,
/// ties broken by label.
pub fn sweep_single_ops(snapshot: &Snapshot, mode: RiskMode) -> Result<Vec<SweepEntry>, RiskError> {
    let ops = snapshot.operations();
    if ops.is_empty() {
        return Ok(Vec::new());
    }
    let mut entries = ops
        .into_iter()
        .map(|op| {
            let report = risk(snapshot, &BreakingSet::new([op.clone()]), mode)?;
            Ok(SweepEntry {
                operation: op,
                score: report.total,
            })
        })
        .collect::<Result<Vec<_>, RiskError>>()?;
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.operation.cmp(&b.operation))
    });
    Ok(entries)
}
