//! Turns a trace tree into branch-key increments.
//!
//! The root span is the entry-point's call and yields the length-1 key.
//! Every client span below it is one inter-service request: its key is the
//! chain of operations from the root down to the callee, where the callee
//! operation is named by the paired server child (or by the client span
//! itself when the callee is not instrumented). Internal, unpaired server and
//! other spans are transparent.

use crate::msp::{BranchKey, OperationId};

use super::{IngestConfig, SpanKind, TraceTree, UnpairedClient};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChainOutcome {
    /// One key per observed request; each stands for a `+1`.
    pub increments: Vec<BranchKey>,
    pub unmappable: usize,
    pub loops: usize,
}

pub fn chains_from_trace(tree: &TraceTree, cfg: &IngestConfig) -> ChainOutcome {
    let mut out = ChainOutcome::default();
    let root = tree.root_index();
    let (root_op, below_root) = match callee(tree, root, cfg) {
        Some(found) => found,
        None => {
            out.unmappable += 1;
            return out;
        }
    };
    let chain = BranchKey::from(root_op);
    out.increments.push(chain.clone());

    let mut stack: Vec<(usize, BranchKey)> =
        below_root.into_iter().map(|c| (c, chain.clone())).collect();
    while let Some((index, chain)) = stack.pop() {
        let span = tree.span(index);
        if span.kind != SpanKind::Client {
            stack.extend(tree.children(index).iter().map(|&c| (c, chain.clone())));
            continue;
        }
        let Some((op, below)) = callee(tree, index, cfg) else {
            log::debug!(
                "trace {}: unmappable client span {}",
                tree.trace_id(),
                span.span_id
            );
            out.unmappable += 1;
            continue;
        };
        match chain.child(op) {
            Ok(next) => {
                out.increments.push(next.clone());
                stack.extend(below.into_iter().map(|c| (c, next.clone())));
            }
            Err(_) => {
                log::warn!(
                    "trace {}: span {} repeats an operation already on its chain {}; skipped",
                    tree.trace_id(),
                    span.span_id,
                    chain
                );
                out.loops += 1;
            }
        }
    }
    out
}

/// Resolves the operation a span calls and the spans that run inside that
/// call.
///
/// For a client span with a server child, the server span names the
/// operation and the children of both continue the chain.
fn callee(tree: &TraceTree, index: usize, cfg: &IngestConfig) -> Option<(OperationId, Vec<usize>)> {
    let span = tree.span(index);
    if span.kind != SpanKind::Client {
        let op = cfg.mapping.map(&span.service, &span.name).ok()?;
        return Some((op, tree.children(index).to_vec()));
    }
    let children = tree.children(index);
    let server = children
        .iter()
        .copied()
        .find(|&c| tree.span(c).kind == SpanKind::Server);
    match server {
        Some(s) => {
            let callee = tree.span(s);
            let op = cfg.mapping.map(&callee.service, &callee.name).ok()?;
            let below = children
                .iter()
                .copied()
                .filter(|&c| c != s)
                .chain(tree.children(s).iter().copied())
                .collect();
            Some((op, below))
        }
        None => match &cfg.unpaired_client {
            UnpairedClient::Skip => None,
            UnpairedClient::UseClientName { prefix } => {
                let label = format!("{}{}", prefix.as_deref().unwrap_or(""), span.name);
                let op = OperationId::bare(&label).ok()?;
                Some((op, children.to_vec()))
            }
        },
    }
}
