//! MSP file format.
//!
//! ```json
//! {"version":1,"entry_label":"ENTRY","paths":[{"id":1,"root":"OPA1","branches":{"OPA1":32,"OPA1;OPB1":20}}]}
//! ```
//!
//! Branch keys use the canonical `;` separator on output; `:` is accepted on
//! input. Unknown top-level fields are ignored.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use serde_json::Number;

use super::{BranchKey, MspError, OpRegistry, OperationId, PathId, Snapshot};

pub const MSP_FORMAT_VERSION: u64 = 1;

#[derive(Serialize)]
struct MspFileOut<'a> {
    version: u64,
    entry_label: &'a str,
    paths: Vec<PathOut<'a>>,
}

#[derive(Serialize)]
struct PathOut<'a> {
    id: PathId,
    root: &'a str,
    branches: BTreeMap<String, u64>,
}

#[derive(Deserialize)]
struct MspFileIn {
    version: u64,
    #[serde(default = "default_entry")]
    entry_label: String,
    #[serde(default)]
    paths: Vec<PathIn>,
}

#[derive(Deserialize)]
struct PathIn {
    id: PathId,
    root: String,
    branches: BTreeMap<String, Number>,
}

fn default_entry() -> String {
    super::DEFAULT_ENTRY_LABEL.to_owned()
}

impl Snapshot {
    /// Compact canonical JSON; equal snapshots serialize identically.
    pub fn to_json(&self) -> String {
        let out = MspFileOut {
            version: MSP_FORMAT_VERSION,
            entry_label: self.entry_label(),
            paths: self
                .paths()
                .iter()
                .map(|p| PathOut {
                    id: p.id(),
                    root: p.root().label(),
                    branches: p.branches().map(|(k, c)| (k.to_string(), c)).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&out).expect("MSP serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, MspError> {
        let file: MspFileIn = serde_json::from_str(text)?;
        if file.version != MSP_FORMAT_VERSION {
            return Err(MspError::UnsupportedVersion(file.version));
        }
        let mut registry = OpRegistry::auto();
        let mut rows = Vec::new();
        for path in file.paths {
            let root = OperationId::new(&path.root)?;
            if path.branches.is_empty() {
                return Err(MspError::EmptyPath(path.id));
            }
            for (text, count) in path.branches {
                let key = BranchKey::parse(&text, &mut registry)?;
                if key.root() != &root {
                    return Err(MspError::RootMismatch {
                        path: path.id,
                        expected: root.label().to_owned(),
                        found: key.root().label().to_owned(),
                    });
                }
                let count = match (count.as_u64(), count.as_i64()) {
                    (Some(c), _) => c,
                    (None, Some(_)) => {
                        return Err(MspError::NegativeCount {
                            path: path.id,
                            key: text,
                        })
                    }
                    _ => {
                        return Err(MspError::InvalidCount {
                            path: path.id,
                            key: text,
                        })
                    }
                };
                rows.push((path.id, key, count));
            }
        }
        let (snapshot, warnings) = Snapshot::build_with_warnings(&file.entry_label, rows)?;
        for w in warnings {
            log::warn!("{w}");
        }
        Ok(snapshot)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, MspError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MspError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    /// Writes the canonical JSON followed by a newline.
    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<(), MspError> {
        let path = path.as_ref();
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text).map_err(|e| MspError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}
