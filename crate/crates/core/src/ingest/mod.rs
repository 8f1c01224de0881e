//! Builds snapshots from exported distributed traces.

mod assemble;
mod chains;
mod span;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::msp::{BranchKey, MspError, OperationId, PathId, Snapshot, DEFAULT_ENTRY_LABEL};

pub use assemble::{assemble_traces, AssemblyStats, TraceDefect, TraceTree};
pub use chains::{chains_from_trace, ChainOutcome};
pub use span::{parse_spans, write_spans, SpanFormat, SpanKind, SpanRecord};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("unknown span format {0:?} (expected \"otlp-json\" or \"jsonl\")")]
    UnknownFormat(String),
    #[error("malformed span export: {0}")]
    Malformed(String),
    #[error("missing {field} at {location}")]
    MissingId {
        field: &'static str,
        location: String,
    },
    #[error("trace {trace_id} rejected: {reason}")]
    MalformedTrace {
        trace_id: String,
        reason: &'static str,
    },
    #[error(transparent)]
    Msp(#[from] MspError),
}

/// How a span's `(service, name)` becomes an operation label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OpMapping {
    /// `service/name`.
    #[default]
    Qualified,
    /// The span name as is; suits names like `OPB2` that already encode
    /// their supplier.
    Bare,
}

impl OpMapping {
    pub fn map(self, service: &str, name: &str) -> Result<OperationId, MspError> {
        match self {
            OpMapping::Qualified => OperationId::qualified(service, name),
            OpMapping::Bare => OperationId::bare(name),
        }
    }
}

impl std::str::FromStr for OpMapping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qualified" => Ok(OpMapping::Qualified),
            "bare" => Ok(OpMapping::Bare),
            other => Err(format!(
                "unknown mapping {other:?} (expected \"qualified\" or \"bare\")"
            )),
        }
    }
}

/// What to do with a client span whose callee has no server span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnpairedClient {
    /// Label the callee with the client span's own name, optionally prefixed.
    UseClientName { prefix: Option<String> },
    /// Count the span as unmappable.
    Skip,
}

impl Default for UnpairedClient {
    fn default() -> Self {
        UnpairedClient::UseClientName { prefix: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OrphanPolicy {
    #[default]
    Drop,
    Reject,
}

/// Half-open `[start_ns, end_ns)` filter on trace root start times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeWindow {
    pub start_ns: u64,
    pub end_ns: u64,
}

impl TimeWindow {
    pub fn contains(&self, t: u64) -> bool {
        self.start_ns <= t && t < self.end_ns
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IngestConfig {
    pub mapping: OpMapping,
    pub unpaired_client: UnpairedClient,
    pub entry_label: String,
    pub window: Option<TimeWindow>,
    pub on_orphan: OrphanPolicy,
    /// Fixed path ids for known roots; other roots are numbered in the order
    /// they are first seen, skipping ids taken here.
    pub path_ids: BTreeMap<OperationId, PathId>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            mapping: OpMapping::default(),
            unpaired_client: UnpairedClient::default(),
            entry_label: DEFAULT_ENTRY_LABEL.to_owned(),
            window: None,
            on_orphan: OrphanPolicy::default(),
            path_ids: BTreeMap::new(),
        }
    }
}

impl IngestConfig {
    /// Reuses the path numbering of an existing snapshot so windows stay
    /// mergeable without renumbering.
    pub fn with_path_ids_from(mut self, snapshot: &Snapshot) -> Self {
        self.path_ids = snapshot
            .paths()
            .iter()
            .map(|p| (p.root().clone(), p.id()))
            .collect();
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub spans: usize,
    pub traces_seen: usize,
    pub accepted: usize,
    pub dropped: usize,
    pub dropped_reasons: BTreeMap<&'static str, usize>,
    pub outside_window: usize,
    pub unmappable: usize,
    pub loops_skipped: usize,
    pub increments: u64,
}

impl IngestReport {
    fn absorb(&mut self, stats: &AssemblyStats) {
        self.traces_seen += stats.traces_seen;
        self.accepted += stats.accepted;
        self.dropped += stats.dropped_total();
        self.outside_window += stats.outside_window;
        for (reason, n) in &stats.dropped {
            *self.dropped_reasons.entry(reason).or_default() += n;
        }
    }
}

/// Sums the increments of all trees into a snapshot.
///
/// Paths are numbered by the order in which their root is first seen, with
/// traces ordered by root start time and then trace id.
pub fn snapshot_from_traces(
    trees: &[TraceTree],
    cfg: &IngestConfig,
) -> Result<(Snapshot, IngestReport), IngestError> {
    let mut order: Vec<&TraceTree> = trees.iter().collect();
    order.sort_by(|a, b| (a.root().start_ns, a.trace_id()).cmp(&(b.root().start_ns, b.trace_id())));

    let mut report = IngestReport {
        accepted: trees.len(),
        traces_seen: trees.len(),
        ..Default::default()
    };
    let mut counts: BTreeMap<BranchKey, u64> = BTreeMap::new();
    let mut first_seen: Vec<OperationId> = Vec::new();
    for tree in order {
        report.spans += tree.len();
        let outcome = chains_from_trace(tree, cfg);
        report.unmappable += outcome.unmappable;
        report.loops_skipped += outcome.loops;
        for key in outcome.increments {
            if key.len() == 1 && !first_seen.contains(key.root()) {
                first_seen.push(key.root().clone());
            }
            report.increments += 1;
            *counts.entry(key).or_default() += 1;
        }
    }

    let mut ids = cfg.path_ids.clone();
    let mut next: PathId = 1;
    for root in first_seen {
        if ids.contains_key(&root) {
            continue;
        }
        while ids.values().any(|&id| id == next) {
            next += 1;
        }
        ids.insert(root, next);
        next += 1;
    }
    let rows = counts
        .into_iter()
        .map(|(key, count)| (ids[key.root()], key, count));
    let (snapshot, warnings) = Snapshot::build_with_warnings(&cfg.entry_label, rows)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok((snapshot, report))
}

/// Parses, assembles and aggregates several span exports into one snapshot.
pub fn ingest<'a, I>(inputs: I, cfg: &IngestConfig) -> Result<(Snapshot, IngestReport), IngestError>
where
    I: IntoIterator<Item = (&'a [u8], SpanFormat)>,
{
    let mut records = Vec::new();
    for (bytes, format) in inputs {
        records.extend(parse_spans(bytes, format)?);
    }
    let span_total = records.len();
    let (trees, stats) = assemble_traces(records, cfg)?;
    let (snapshot, mut report) = snapshot_from_traces(&trees, cfg)?;
    report.traces_seen = 0;
    report.accepted = 0;
    report.absorb(&stats);
    report.spans = span_total;
    Ok((snapshot, report))
}
