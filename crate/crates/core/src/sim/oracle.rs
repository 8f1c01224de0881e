//! Brute-force reference for the risk engine.
//!
//! Kept independent of `crate::risk`: it works from the raw snapshot rows
//! and the canonical key text only.

use std::collections::{BTreeMap, BTreeSet};

use crate::msp::{PathId, Snapshot};
use crate::risk::{BreakingSet, RiskError, RiskMode};

pub fn oracle_risk(snapshot: &Snapshot, s: &BreakingSet, mode: RiskMode) -> Result<f64, RiskError> {
    if snapshot.grand_total() == 0 {
        return Err(RiskError::EmptySnapshot);
    }
    let broken: BTreeSet<&str> = s.iter().map(|o| o.label()).collect();
    Ok(match mode {
        RiskMode::AffectedPaths => enumerate_requests(snapshot, &broken),
        RiskMode::Literal => literal_loop(snapshot, &broken),
    })
}

struct Row {
    path: PathId,
    labels: Vec<String>,
    count: u64,
}

fn rows(snapshot: &Snapshot) -> Vec<Row> {
    snapshot
        .entries()
        .map(|(path, e)| Row {
            path,
            labels: e.key.to_string().split(';').map(str::to_owned).collect(),
            count: e.count,
        })
        .collect()
}

/// Replays every stored request one at a time, tagged with its path, and
/// counts those whose path touches a broken operation.
fn enumerate_requests(snapshot: &Snapshot, broken: &BTreeSet<&str>) -> f64 {
    let rows = rows(snapshot);
    let mut path_broken: BTreeMap<PathId, bool> = BTreeMap::new();
    for row in &rows {
        let hit = row.labels.iter().any(|l| broken.contains(l.as_str()));
        *path_broken.entry(row.path).or_default() |= hit;
    }
    let requests = rows
        .iter()
        .flat_map(|row| std::iter::repeat_n(row.path, row.count as usize));
    let mut total: u64 = 0;
    let mut affected: u64 = 0;
    for path in requests {
        total += 1;
        if path_broken[&path] {
            affected += 1;
        }
    }
    affected as f64 / total as f64
}

/// Direct transcription of the per-path, per-operation, per-branch loop with
/// the unsimplified weighted formula.
fn literal_loop(snapshot: &Snapshot, broken: &BTreeSet<&str>) -> f64 {
    let rows = rows(snapshot);
    let entry = snapshot.entry_label().to_owned();
    let caller = |labels: &[String]| -> String {
        if labels.len() == 1 {
            entry.clone()
        } else {
            crate::msp::OperationId::new(&labels[labels.len() - 2])
                .expect("stored labels are valid")
                .service()
                .to_owned()
        }
    };

    let mut req_msp: u64 = 0;
    let mut req_ms: BTreeMap<String, u64> = BTreeMap::new();
    let mut count_of: BTreeMap<(PathId, String), u64> = BTreeMap::new();
    for row in &rows {
        req_msp += row.count;
        *req_ms.entry(caller(&row.labels)).or_default() += row.count;
        count_of.insert((row.path, row.labels.join(";")), row.count);
    }
    let c_ms = |ms: &str| req_ms.get(ms).copied().unwrap_or(0) as f64 / req_msp as f64;

    let mut by_path: BTreeMap<PathId, Vec<&Row>> = BTreeMap::new();
    for row in &rows {
        by_path.entry(row.path).or_default().push(row);
    }

    let mut r = 0.0;
    for (&p, branches) in &by_path {
        for o in broken {
            for t in branches {
                if t.labels.iter().any(|l| l == o) {
                    let mut risk_t = 0.0;
                    for i in 1..=t.labels.len() {
                        let step = &t.labels[..i];
                        let ms = caller(step);
                        let req_ms_op = count_of[&(p, step.join(";"))];
                        let req_ms_all = req_ms[&ms];
                        if req_ms_all > 0 {
                            risk_t += req_ms_op as f64 / req_ms_all as f64 * c_ms(&ms);
                        }
                    }
                    r += risk_t;
                }
            }
        }
    }
    r.min(1.0)
}
