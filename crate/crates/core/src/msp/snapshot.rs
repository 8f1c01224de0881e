//! Immutable MSP snapshots with precomputed request totals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::warn;

use super::{BranchKey, MspError, OperationId};

/// Pseudo-service name of the entry-point unless configured otherwise.
pub const DEFAULT_ENTRY_LABEL: &str = "ENTRY";

/// Path identifier, positive.
pub type PathId = u32;

/// A branch key with the number of requests observed on its final edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchEntry {
    pub key: BranchKey,
    pub count: u64,
}

/// All branches sharing one root operation; one user activity type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    id: PathId,
    root: OperationId,
    branches: BTreeMap<BranchKey, u64>,
    weight: u64,
}

impl Path {
    pub fn id(&self) -> PathId {
        self.id
    }

    pub fn root(&self) -> &OperationId {
        &self.root
    }

    /// Branches in key order.
    pub fn branches(&self) -> impl Iterator<Item = (&BranchKey, u64)> {
        self.branches.iter().map(|(k, &c)| (k, c))
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn count(&self, key: &BranchKey) -> Option<u64> {
        self.branches.get(key).copied()
    }

    /// Sum of all branch counts in the path.
    pub fn weight(&self) -> u64 {
        self.weight
    }
}

/// Something the builder repaired or noticed but did not reject.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BuildWarning {
    /// A missing intermediate prefix was added with count 0.
    MaterializedPrefix { path: PathId, key: String },
    /// A branch saw more requests than its parent (fan-out).
    ChildExceedsParent {
        path: PathId,
        key: String,
        count: u64,
        parent_count: u64,
    },
}

impl fmt::Display for BuildWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildWarning::MaterializedPrefix { path, key } => {
                write!(
                    f,
                    "path {path}: missing prefix {key} materialized with count 0"
                )
            }
            BuildWarning::ChildExceedsParent {
                path,
                key,
                count,
                parent_count,
            } => write!(
                f,
                "path {path}: branch {key} count {count} exceeds parent count {parent_count}"
            ),
        }
    }
}

/// The Microservice Path database for one time window.
///
/// Immutable once built; share it freely between readers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    entry_label: String,
    paths: Vec<Path>,
    grand_total: u64,
    caller_totals: BTreeMap<String, u64>,
}

impl Snapshot {
    pub fn empty() -> Self {
        Self::empty_with_entry(DEFAULT_ENTRY_LABEL)
    }

    pub fn empty_with_entry(entry_label: &str) -> Self {
        Self {
            entry_label: entry_label.to_owned(),
            paths: Vec::new(),
            grand_total: 0,
            caller_totals: BTreeMap::new(),
        }
    }

    /// Builds a snapshot from `(path id, key, count)` rows, logging warnings.
    pub fn build<I>(rows: I) -> Result<Self, MspError>
    where
        I: IntoIterator<Item = (PathId, BranchKey, u64)>,
    {
        let (snapshot, warnings) = Self::build_with_warnings(DEFAULT_ENTRY_LABEL, rows)?;
        for w in &warnings {
            warn!("{w}");
        }
        Ok(snapshot)
    }

    /// Builds a snapshot and returns the warnings instead of logging them.
    ///
    /// Rows are grouped by path id. Missing prefixes are materialized with
    /// count 0. The result does not depend on row order.
    pub fn build_with_warnings<I>(
        entry_label: &str,
        rows: I,
    ) -> Result<(Self, Vec<BuildWarning>), MspError>
    where
        I: IntoIterator<Item = (PathId, BranchKey, u64)>,
    {
        validate_entry_label(entry_label)?;
        let mut grouped: BTreeMap<PathId, BTreeMap<BranchKey, u64>> = BTreeMap::new();
        for (id, key, count) in rows {
            if id == 0 {
                return Err(MspError::InvalidPathId(id));
            }
            let branches = grouped.entry(id).or_default();
            if branches.contains_key(&key) {
                return Err(MspError::DuplicateKey {
                    path: id,
                    key: key.to_string(),
                });
            }
            branches.insert(key, count);
        }

        let mut warnings = Vec::new();
        let mut paths = Vec::with_capacity(grouped.len());
        let mut roots: BTreeMap<OperationId, PathId> = BTreeMap::new();
        for (id, mut branches) in grouped {
            let mut path_roots: BTreeSet<&OperationId> =
                branches.keys().map(BranchKey::root).collect();
            if path_roots.len() > 1 {
                let mut it = path_roots.iter();
                return Err(MspError::RootMismatch {
                    path: id,
                    expected: it.next().unwrap().label().to_owned(),
                    found: it.next().unwrap().label().to_owned(),
                });
            }
            let root = match path_roots.pop_first() {
                Some(r) => r.clone(),
                None => return Err(MspError::EmptyPath(id)),
            };
            if let Some(&other) = roots.get(&root) {
                return Err(MspError::DuplicateRoot {
                    root: root.label().to_owned(),
                    first: other,
                    second: id,
                });
            }
            roots.insert(root.clone(), id);

            let missing: BTreeSet<BranchKey> = branches
                .keys()
                .flat_map(|k| (1..k.len()).filter_map(move |n| k.prefix(n)))
                .filter(|p| !branches.contains_key(p))
                .collect();
            for key in missing {
                warnings.push(BuildWarning::MaterializedPrefix {
                    path: id,
                    key: key.to_string(),
                });
                branches.insert(key, 0);
            }
            for (key, &count) in &branches {
                if let Some(parent_count) = key.parent().and_then(|p| branches.get(&p).copied()) {
                    if count > parent_count {
                        warnings.push(BuildWarning::ChildExceedsParent {
                            path: id,
                            key: key.to_string(),
                            count,
                            parent_count,
                        });
                    }
                }
            }
            let weight = checked_sum(branches.values().copied())?;
            paths.push(Path {
                id,
                root,
                branches,
                weight,
            });
        }
        Ok((Self::assemble(entry_label, paths)?, warnings))
    }

    fn assemble(entry_label: &str, paths: Vec<Path>) -> Result<Self, MspError> {
        let grand_total = checked_sum(paths.iter().map(Path::weight))?;
        let mut caller_totals: BTreeMap<String, u64> = BTreeMap::new();
        for path in &paths {
            for (key, count) in path.branches() {
                *caller_totals
                    .entry(key.caller(entry_label).to_owned())
                    .or_default() += count;
            }
        }
        Ok(Self {
            entry_label: entry_label.to_owned(),
            paths,
            grand_total,
            caller_totals,
        })
    }

    pub fn entry_label(&self) -> &str {
        &self.entry_label
    }

    /// Paths ordered by id.
    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path(&self, id: PathId) -> Option<&Path> {
        self.paths.iter().find(|p| p.id == id)
    }

    pub fn path_by_root(&self, root: &OperationId) -> Option<&Path> {
        self.paths.iter().find(|p| &p.root == root)
    }

    /// Total number of requests in the snapshot.
    pub fn grand_total(&self) -> u64 {
        self.grand_total
    }

    /// Requests issued by each caller, the entry-point included.
    pub fn caller_totals(&self) -> &BTreeMap<String, u64> {
        &self.caller_totals
    }

    pub fn caller_total(&self, caller: &str) -> u64 {
        self.caller_totals.get(caller).copied().unwrap_or(0)
    }

    /// Looks up the count of a branch in the path rooted at its first op.
    pub fn count(&self, key: &BranchKey) -> Option<u64> {
        self.path_by_root(key.root())?.count(key)
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn branch_count(&self) -> usize {
        self.paths.iter().map(Path::branch_count).sum()
    }

    /// All branch entries, ordered by path then key.
    pub fn entries(&self) -> impl Iterator<Item = (PathId, BranchEntry)> + '_ {
        self.paths.iter().flat_map(|p| {
            p.branches().map(move |(key, count)| {
                (
                    p.id,
                    BranchEntry {
                        key: key.clone(),
                        count,
                    },
                )
            })
        })
    }

    /// Distinct operations appearing in any branch key.
    pub fn operations(&self) -> BTreeSet<OperationId> {
        self.paths
            .iter()
            .flat_map(|p| p.branches.keys())
            .flat_map(|k| k.ops().iter().cloned())
            .collect()
    }

    /// Distinct supplier services of all operations.
    pub fn services(&self) -> BTreeSet<String> {
        self.operations()
            .iter()
            .map(|op| op.service().to_owned())
            .collect()
    }

    /// The caller's share of all requests in the snapshot.
    pub fn coefficient(&self, caller: &str) -> Result<f64, MspError> {
        if self.grand_total == 0 {
            return Err(MspError::UndefinedCoefficient);
        }
        Ok(self.caller_total(caller) as f64 / self.grand_total as f64)
    }

    /// Combines two windows by summing counts of equal keys in paths with
    /// equal roots.
    ///
    /// Path ids are kept when they are consistent across both inputs;
    /// otherwise every path is renumbered from 1 in root label order.
    pub fn merge(&self, other: &Snapshot) -> Result<Snapshot, MspError> {
        if self.entry_label != other.entry_label {
            return Err(MspError::EntryLabelMismatch(
                self.entry_label.clone(),
                other.entry_label.clone(),
            ));
        }
        let mut by_root: BTreeMap<OperationId, (BTreeSet<PathId>, BTreeMap<BranchKey, u64>)> =
            BTreeMap::new();
        for path in self.paths.iter().chain(&other.paths) {
            let (ids, branches) = by_root.entry(path.root.clone()).or_default();
            ids.insert(path.id);
            for (key, count) in path.branches() {
                let slot = branches.entry(key.clone()).or_default();
                *slot = slot.checked_add(count).ok_or(MspError::CountOverflow)?;
            }
        }

        let mut id_owners: BTreeMap<PathId, usize> = BTreeMap::new();
        for (ids, _) in by_root.values() {
            for id in ids {
                *id_owners.entry(*id).or_default() += 1;
            }
        }
        let consistent =
            by_root.values().all(|(ids, _)| ids.len() == 1) && id_owners.values().all(|&n| n == 1);

        let mut paths = Vec::with_capacity(by_root.len());
        for (n, (root, (ids, branches))) in by_root.into_iter().enumerate() {
            let id = if consistent {
                *ids.first().unwrap()
            } else {
                n as PathId + 1
            };
            let weight = checked_sum(branches.values().copied())?;
            paths.push(Path {
                id,
                root,
                branches,
                weight,
            });
        }
        paths.sort_by_key(|p| p.id);
        Self::assemble(&self.entry_label, paths)
    }
}

fn validate_entry_label(label: &str) -> Result<(), MspError> {
    if label.is_empty() || label.contains([';', ':']) {
        return Err(MspError::InvalidEntryLabel(label.to_owned()));
    }
    Ok(())
}

fn checked_sum<I: IntoIterator<Item = u64>>(counts: I) -> Result<u64, MspError> {
    counts
        .into_iter()
        .try_fold(0u64, |acc, c| acc.checked_add(c))
        .ok_or(MspError::CountOverflow)
}
