//! Regroups flat span lists into per-trace trees.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{IngestConfig, IngestError, OrphanPolicy, SpanRecord};

/// One distributed trace: a tree of spans under a single root.
#[derive(Clone, Debug)]
pub struct TraceTree {
    trace_id: String,
    spans: Vec<SpanRecord>,
    root: usize,
    children: Vec<Vec<usize>>,
}

impl TraceTree {
    pub fn trace_id(&self) -> &str {
        &self.trace_id
    }

    pub fn root(&self) -> &SpanRecord {
        &self.spans[self.root]
    }

    pub fn root_index(&self) -> usize {
        self.root
    }

    pub fn span(&self, index: usize) -> &SpanRecord {
        &self.spans[index]
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Child span indices, ordered by span id.
    pub fn children(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    /// Number of spans on the longest root-to-leaf chain.
    pub fn depth(&self) -> usize {
        fn walk(tree: &TraceTree, i: usize) -> usize {
            1 + tree.children[i]
                .iter()
                .map(|&c| walk(tree, c))
                .max()
                .unwrap_or(0)
        }
        walk(self, self.root)
    }
}

/// Why a trace could not be turned into a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TraceDefect {
    DuplicateSpanId,
    MissingParent,
    NoRoot,
    MultipleRoots,
    Cycle,
}

impl TraceDefect {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceDefect::DuplicateSpanId => "duplicate span id",
            TraceDefect::MissingParent => "missing parent",
            TraceDefect::NoRoot => "no root",
            TraceDefect::MultipleRoots => "multiple roots",
            TraceDefect::Cycle => "cycle",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    pub traces_seen: usize,
    pub accepted: usize,
    pub outside_window: usize,
    pub dropped: BTreeMap<&'static str, usize>,
}

impl AssemblyStats {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Groups spans by trace id and builds one tree per well-formed trace.
///
/// Trees come back ordered by trace id; the input order of spans does not
/// matter. Malformed traces are dropped or abort the whole call depending on
/// `cfg.on_orphan`. Traces whose root starts outside `cfg.window` are skipped.
pub fn assemble_traces(
    records: Vec<SpanRecord>,
    cfg: &IngestConfig,
) -> Result<(Vec<TraceTree>, AssemblyStats), IngestError> {
    let mut by_trace: BTreeMap<String, Vec<SpanRecord>> = BTreeMap::new();
    for span in records {
        by_trace
            .entry(span.trace_id.clone())
            .or_default()
            .push(span);
    }
    let mut stats = AssemblyStats {
        traces_seen: by_trace.len(),
        ..Default::default()
    };
    let mut trees = Vec::new();
    for (trace_id, spans) in by_trace {
        match build_tree(trace_id.clone(), spans) {
            Ok(tree) => {
                if cfg
                    .window
                    .is_some_and(|w| !w.contains(tree.root().start_ns))
                {
                    stats.outside_window += 1;
                    continue;
                }
                stats.accepted += 1;
                trees.push(tree);
            }
            Err(defect) => match cfg.on_orphan {
                OrphanPolicy::Drop => {
                    log::debug!("dropping trace {trace_id}: {}", defect.as_str());
                    *stats.dropped.entry(defect.as_str()).or_default() += 1;
                }
                OrphanPolicy::Reject => {
                    return Err(IngestError::MalformedTrace {
                        trace_id,
                        reason: defect.as_str(),
                    })
                }
            },
        }
    }
    Ok((trees, stats))
}

fn build_tree(trace_id: String, mut spans: Vec<SpanRecord>) -> Result<TraceTree, TraceDefect> {
    spans.sort_by(|a, b| a.span_id.cmp(&b.span_id));
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, span) in spans.iter().enumerate() {
        if index.insert(&span.span_id, i).is_some() {
            return Err(TraceDefect::DuplicateSpanId);
        }
    }
    let mut children = vec![Vec::new(); spans.len()];
    let mut roots = Vec::new();
    for (i, span) in spans.iter().enumerate() {
        match &span.parent_span_id {
            None => roots.push(i),
            Some(parent) => match index.get(parent.as_str()) {
                Some(&p) => children[p].push(i),
                None => return Err(TraceDefect::MissingParent),
            },
        }
    }
    let root = match roots.as_slice() {
        [] => return Err(TraceDefect::NoRoot),
        [root] => *root,
        _ => return Err(TraceDefect::MultipleRoots),
    };
    // with every parent present, anything unreachable from the root sits on a cycle
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        for &c in &children[i] {
            if seen.insert(c) {
                queue.push_back(c);
            }
        }
    }
    if seen.len() != spans.len() {
        return Err(TraceDefect::Cycle);
    }
    Ok(TraceTree {
        trace_id,
        spans,
        root,
        children,
    })
}
