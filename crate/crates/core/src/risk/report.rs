use std::fmt;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

use super::RiskMode;
use crate::msp::{OperationId, PathId};

/// Risk numbers are computed in full precision and rendered with four
/// decimals.
pub fn render_score(x: f64) -> String {
    // -0.0 would render as "-0.0000"
    format!("{:.4}", x + 0.0)
}

pub(crate) fn serialize_score<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(render_score(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathContribution {
    pub path: PathId,
    #[serde(serialize_with = "serialize_score")]
    pub contribution: f64,
}

/// One branch's share of the total. In literal mode `operation` names the
/// breaking operation that matched the branch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchContribution {
    pub branch: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    #[serde(serialize_with = "serialize_score")]
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskReport {
    pub mode: RiskMode,
    /// Final score in `[0, 1]`.
    pub total: f64,
    /// Sum before clamping; equals `total` in affected-paths mode.
    pub raw_total: f64,
    pub clamped: bool,
    pub per_path: Vec<PathContribution>,
    pub per_branch: Vec<BranchContribution>,
    /// Breaking operations that occur in no branch key.
    pub unmatched: Vec<OperationId>,
}

impl RiskReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn affected_path_ids(&self) -> Vec<PathId> {
        self.per_path.iter().map(|p| p.path).collect()
    }
}

impl Serialize for RiskReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Score(f64);
        impl Serialize for Score {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                serialize_score(&self.0, s)
            }
        }
        let mut st = s.serialize_struct("RiskReport", 6)?;
        st.serialize_field("mode", &self.mode)?;
        st.serialize_field("total", &Score(self.total))?;
        st.serialize_field("clamped", &self.clamped)?;
        st.serialize_field("per_path", &self.per_path)?;
        st.serialize_field("per_branch", &self.per_branch)?;
        st.serialize_field("unmatched", &self.unmatched)?;
        st.end()
    }
}

impl fmt::Display for RiskReport {
    /// Plain-text table for terminals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode     {}", self.mode)?;
        write!(f, "total    {}", render_score(self.total))?;
        if self.clamped {
            write!(f, " (clamped from {})", render_score(self.raw_total))?;
        }
        writeln!(f)?;
        if !self.per_path.is_empty() {
            writeln!(f, "\npath  contribution")?;
            for p in &self.per_path {
                writeln!(f, "{:<5} {}", p.path, render_score(p.contribution))?;
            }
        }
        if !self.per_branch.is_empty() {
            writeln!(f, "\nbranch{}contribution", " ".repeat(26))?;
            for b in &self.per_branch {
                let name = match &b.operation {
                    Some(op) => format!("{} [{}]", b.branch, op),
                    None => b.branch.clone(),
                };
                writeln!(f, "{:<31} {}", name, render_score(b.contribution))?;
            }
        }
        if !self.unmatched.is_empty() {
            let labels: Vec<_> = self.unmatched.iter().map(OperationId::label).collect();
            writeln!(f, "\nunmatched {}", labels.join(","))?;
        }
        Ok(())
    }
}

/// One row of a single-operation sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub operation: OperationId,
    #[serde(serialize_with = "serialize_score")]
    pub score: f64,
}
