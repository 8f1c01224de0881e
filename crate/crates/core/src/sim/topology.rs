//! Topology specs: branch templates with exact per-branch multiplicities.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path as FsPath;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{SpanKind, SpanRecord};
use crate::msp::{BranchKey, OpRegistry, OperationId, PathId, Snapshot, DEFAULT_ENTRY_LABEL};

use super::SimError;

/// File form:
///
/// ```json
/// {"seed":7,"paths":[{"id":1,"branches":{"OPA1":32,"OPA1;OPB1":20}}]}
/// ```
///
/// `services` and `operations` are derived on output and checked on input
/// when present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_entry")]
    pub entry_label: String,
    #[serde(default)]
    pub services: Vec<String>,
    #[serde(default)]
    pub operations: Vec<String>,
    pub paths: Vec<PathTemplate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathTemplate {
    pub id: PathId,
    /// Canonical key text to request count per replay.
    pub branches: BTreeMap<String, u64>,
}

fn default_entry() -> String {
    DEFAULT_ENTRY_LABEL.to_owned()
}

/// Parsed, checked view of one path template.
struct CheckedPath {
    id: PathId,
    branches: BTreeMap<BranchKey, u64>,
}

impl TopologySpec {
    pub fn from_snapshot(snapshot: &Snapshot, seed: u64) -> Self {
        let mut spec = Self {
            seed,
            entry_label: snapshot.entry_label().to_owned(),
            services: Vec::new(),
            operations: Vec::new(),
            paths: snapshot
                .paths()
                .iter()
                .map(|p| PathTemplate {
                    id: p.id(),
                    branches: p.branches().map(|(k, c)| (k.to_string(), c)).collect(),
                })
                .collect(),
        };
        spec.fill_inventory();
        spec
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let mut spec: TopologySpec = serde_json::from_str(text)?;
        let declared_ops: BTreeSet<String> = spec.operations.iter().cloned().collect();
        let declared_services: BTreeSet<String> = spec.services.iter().cloned().collect();
        spec.check()?;
        spec.fill_inventory();
        if !declared_ops.is_empty() {
            if let Some(op) = spec.operations.iter().find(|o| !declared_ops.contains(*o)) {
                return Err(SimError::Template(format!(
                    "operation {op} is not declared"
                )));
            }
        }
        if !declared_services.is_empty() {
            if let Some(s) = spec
                .services
                .iter()
                .find(|s| !declared_services.contains(*s))
            {
                return Err(SimError::Template(format!("service {s} is not declared")));
            }
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn fill_inventory(&mut self) {
        let mut ops = BTreeSet::new();
        for path in &self.paths {
            for key in path.branches.keys() {
                if let Ok(k) = key.parse::<BranchKey>() {
                    ops.extend(k.ops().iter().cloned());
                }
            }
        }
        self.services = ops
            .iter()
            .map(|o| o.service().to_owned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        self.operations = ops.iter().map(|o| o.label().to_owned()).collect();
    }

    /// Templates must parse, be loop-free and prefix-closed, and have one
    /// distinct root per path.
    fn check(&self) -> Result<Vec<CheckedPath>, SimError> {
        let mut registry = OpRegistry::auto();
        let mut roots: BTreeSet<OperationId> = BTreeSet::new();
        let mut ids = BTreeSet::new();
        let mut out = Vec::new();
        for path in &self.paths {
            if path.id == 0 || !ids.insert(path.id) {
                return Err(SimError::Template(format!(
                    "invalid or repeated path id {}",
                    path.id
                )));
            }
            let mut branches = BTreeMap::new();
            for (text, &count) in &path.branches {
                let key = BranchKey::parse(text, &mut registry)?;
                if branches.insert(key, count).is_some() {
                    return Err(SimError::Template(format!(
                        "path {}: {text} listed twice",
                        path.id
                    )));
                }
            }
            let path_roots: BTreeSet<_> = branches.keys().map(|k| k.root().clone()).collect();
            let root = match (path_roots.len(), path_roots.first()) {
                (1, Some(root)) => root.clone(),
                _ => {
                    return Err(SimError::Template(format!(
                        "path {} must have exactly one root",
                        path.id
                    )))
                }
            };
            if !roots.insert(root.clone()) {
                return Err(SimError::Template(format!("root {root} used by two paths")));
            }
            for key in branches.keys() {
                if let Some(parent) = key.parent() {
                    if !branches.contains_key(&parent) {
                        return Err(SimError::Template(format!(
                            "path {}: {key} has no parent template {parent}",
                            path.id
                        )));
                    }
                }
            }
            out.push(CheckedPath {
                id: path.id,
                branches,
            });
        }
        Ok(out)
    }

    /// Entry-point requests in one replay of the spec.
    pub fn requests_per_replay(&self) -> Result<u64, SimError> {
        Ok(self
            .check()?
            .iter()
            .flat_map(|p| p.branches.iter())
            .filter(|(k, _)| k.len() == 1)
            .map(|(_, &c)| c)
            .sum())
    }
}

/// Emits spans for `n_requests` entry-point requests.
///
/// `n_requests` must be a whole number of replays of the spec; every replay
/// reproduces the template counts exactly. Each branch occurrence hangs under
/// an occurrence of its parent chosen round-robin over a seeded permutation,
/// so fan-out is spread evenly. The output is shuffled; identical seeds give
/// identical output.
pub fn generate_traces(spec: &TopologySpec, n_requests: u64) -> Result<Vec<SpanRecord>, SimError> {
    let paths = spec.check()?;
    let per_replay = spec.requests_per_replay()?;
    if n_requests == 0 {
        return Ok(Vec::new());
    }
    if per_replay == 0 || !n_requests.is_multiple_of(per_replay) {
        return Err(SimError::Template(format!(
            "{n_requests} requests is not a whole number of replays of {per_replay}"
        )));
    }
    let replays = n_requests / per_replay;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    struct Node {
        op: OperationId,
        parent: Option<usize>,
        trace: usize,
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut trace_count = 0usize;
    for path in &paths {
        let mut occurrences: BTreeMap<&BranchKey, Vec<usize>> = BTreeMap::new();
        let mut keys: Vec<&BranchKey> = path.branches.keys().collect();
        keys.sort_by_key(|k| k.len());
        for key in keys {
            let count = path.branches[key] * replays;
            let mut mine = Vec::with_capacity(count as usize);
            match key.parent() {
                None => {
                    for _ in 0..count {
                        nodes.push(Node {
                            op: key.last().clone(),
                            parent: None,
                            trace: trace_count,
                        });
                        trace_count += 1;
                        mine.push(nodes.len() - 1);
                    }
                }
                Some(parent) => {
                    let mut parents = occurrences[&parent].clone();
                    if parents.is_empty() && count > 0 {
                        return Err(SimError::Template(format!(
                            "path {}: {key} has {count} requests but its parent has none",
                            path.id
                        )));
                    }
                    parents.shuffle(&mut rng);
                    for i in 0..count as usize {
                        let p = parents[i % parents.len()];
                        nodes.push(Node {
                            op: key.last().clone(),
                            parent: Some(p),
                            trace: nodes[p].trace,
                        });
                        mine.push(nodes.len() - 1);
                    }
                }
            }
            occurrences.insert(key, mine);
        }
    }

    let trace_ids: Vec<String> = (0..trace_count)
        .map(|_| format!("{:032x}", rng.random::<u128>()))
        .collect();
    let mut server_span: Vec<String> = Vec::with_capacity(nodes.len());
    let mut used_ids: BTreeSet<(usize, u64)> = BTreeSet::new();
    let mut fresh_id = |rng: &mut ChaCha8Rng, trace: usize| loop {
        let id = rng.random::<u64>();
        if used_ids.insert((trace, id)) {
            return format!("{id:016x}");
        }
    };
    let mut depth = vec![0u64; nodes.len()];
    let mut spans = Vec::with_capacity(nodes.len() * 2);
    for (i, node) in nodes.iter().enumerate() {
        let trace_start = 1_000_000_000 + node.trace as u64 * 1_000_000;
        let trace_id = &trace_ids[node.trace];
        let callee_service = node.op.service().to_owned();
        match node.parent {
            None => {
                let id = fresh_id(&mut rng, node.trace);
                spans.push(SpanRecord {
                    trace_id: trace_id.clone(),
                    span_id: id.clone(),
                    parent_span_id: None,
                    service: callee_service,
                    name: node.op.label().to_owned(),
                    kind: SpanKind::Server,
                    start_ns: trace_start,
                    end_ns: trace_start + 900_000,
                });
                server_span.push(id);
            }
            Some(p) => {
                depth[i] = depth[p] + 1;
                let start = trace_start + depth[i] * 1_000 + i as u64 % 1_000;
                let client_id = fresh_id(&mut rng, node.trace);
                let server_id = fresh_id(&mut rng, node.trace);
                spans.push(SpanRecord {
                    trace_id: trace_id.clone(),
                    span_id: client_id.clone(),
                    parent_span_id: Some(server_span[p].clone()),
                    service: nodes[p].op.service().to_owned(),
                    name: node.op.label().to_owned(),
                    kind: SpanKind::Client,
                    start_ns: start,
                    end_ns: start + 500,
                });
                spans.push(SpanRecord {
                    trace_id: trace_id.clone(),
                    span_id: server_id.clone(),
                    parent_span_id: Some(client_id),
                    service: callee_service,
                    name: node.op.label().to_owned(),
                    kind: SpanKind::Server,
                    start_ns: start + 10,
                    end_ns: start + 400,
                });
                server_span.push(server_id);
            }
        }
    }
    spans.shuffle(&mut rng);
    Ok(spans)
}

/// Bounds for [`random_snapshot`].
#[derive(Clone, Copy, Debug)]
pub struct RandomBounds {
    pub max_services: usize,
    pub max_paths: usize,
    pub max_depth: usize,
    pub max_count: u64,
}

impl Default for RandomBounds {
    fn default() -> Self {
        Self {
            max_services: 8,
            max_paths: 5,
            max_depth: 5,
            max_count: 1_000_000,
        }
    }
}

/// A random loop-free, prefix-closed snapshot with at least one request.
///
/// Counts mix zeros, small values and values up to `max_count`, and children
/// may exceed their parents.
pub fn random_snapshot<R: Rng>(rng: &mut R, bounds: RandomBounds) -> Snapshot {
    let n_services = rng.random_range(1..=bounds.max_services.clamp(1, 26));
    let mut ops: Vec<OperationId> = Vec::new();
    for s in 0..n_services {
        let letter = (b'A' + s as u8) as char;
        for k in 1..=rng.random_range(1..=3) {
            ops.push(OperationId::new(&format!("OP{letter}{k}")).expect("valid label"));
        }
    }
    let n_paths = rng.random_range(1..=bounds.max_paths.min(ops.len()).max(1));
    let mut roots = ops.clone();
    roots.shuffle(rng);
    roots.truncate(n_paths);

    let mut rows = Vec::new();
    for (i, root) in roots.into_iter().enumerate() {
        let mut frontier = vec![BranchKey::from(root)];
        while let Some(key) = frontier.pop() {
            rows.push((
                i as PathId + 1,
                key.clone(),
                random_count(rng, bounds.max_count),
            ));
            if key.len() >= bounds.max_depth {
                continue;
            }
            let fanout = match rng.random_range(0..10) {
                0..=3 => 0,
                4..=7 => 1,
                8 => 2,
                _ => 3,
            };
            for _ in 0..fanout {
                let candidates: Vec<_> = ops.iter().filter(|o| !key.contains(o)).collect();
                if let Some(op) = candidates.choose(rng) {
                    if let Ok(child) = key.child((*op).clone()) {
                        if !frontier.contains(&child) && !rows.iter().any(|(_, k, _)| k == &child) {
                            frontier.push(child);
                        }
                    }
                }
            }
        }
    }
    if rows.iter().all(|(_, _, c)| *c == 0) {
        rows[0].2 = 1;
    }
    Snapshot::build_with_warnings(DEFAULT_ENTRY_LABEL, rows)
        .expect("generated rows form a valid snapshot")
        .0
}

fn random_count<R: Rng>(rng: &mut R, max: u64) -> u64 {
    match rng.random_range(0..10) {
        0 | 1 => 0,
        2..=6 => rng.random_range(1..=max.min(1_000)),
        _ => rng.random_range(1..=max.max(1)),
    }
}

/// A random breaking set drawn from the snapshot's operations plus the
/// occasional operation that never appears.
pub fn random_breaking_set<R: Rng>(rng: &mut R, snapshot: &Snapshot) -> crate::risk::BreakingSet {
    let ops: Vec<_> = snapshot.operations().into_iter().collect();
    let mut set = crate::risk::BreakingSet::default();
    let n = rng.random_range(0..=ops.len().min(4));
    for _ in 0..n {
        set.insert(ops.choose(rng).expect("nonempty").clone());
    }
    if rng.random_bool(0.1) {
        set.insert(OperationId::new("OPZ9").expect("valid label"));
    }
    set
}
