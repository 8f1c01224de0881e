//! Operation identifiers and branch keys.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MspError;

/// Separator used in canonical key renderings.
pub const KEY_SEPARATOR: char = ';';
/// Alternate separator accepted on input.
pub const ALT_KEY_SEPARATOR: char = ':';

/// An operation exposed by a supplier service, the unit that can break.
///
/// The label is the canonical rendering used in branch keys. The supplier
/// service is derived from the label, so two ids with the same label always
/// name the same `(service, name)` pair:
///
/// * `svc/op` names operation `op` of service `svc`;
/// * `OP<Letters><digits>` (e.g. `OPB2`) names an operation of service `B`;
/// * any other label is treated as an operation of a service with the same name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OperationId {
    label: String,
}

impl OperationId {
    pub fn new(label: &str) -> Result<Self, MspError> {
        let label = label.trim();
        if label.is_empty() {
            return Err(MspError::EmptyLabel);
        }
        if label.contains([KEY_SEPARATOR, ALT_KEY_SEPARATOR]) {
            return Err(MspError::SeparatorInLabel(label.to_owned()));
        }
        if label.starts_with('/') || label.ends_with('/') {
            return Err(MspError::InvalidLabel(label.to_owned()));
        }
        Ok(Self {
            label: label.to_owned(),
        })
    }

    /// Builds the `service/name` label, replacing characters that would
    /// make the label ambiguous.
    pub fn qualified(service: &str, name: &str) -> Result<Self, MspError> {
        let service = sanitize(service.trim(), &[KEY_SEPARATOR, ALT_KEY_SEPARATOR, '/']);
        let name = sanitize(name.trim(), &[KEY_SEPARATOR, ALT_KEY_SEPARATOR]);
        if service.is_empty() || name.is_empty() {
            return Err(MspError::EmptyLabel);
        }
        Self::new(&format!("{service}/{name}"))
    }

    /// Uses the operation name verbatim as the label (separators replaced).
    pub fn bare(name: &str) -> Result<Self, MspError> {
        Self::new(&sanitize(name.trim(), &[KEY_SEPARATOR, ALT_KEY_SEPARATOR]))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn service(&self) -> &str {
        infer_service(&self.label)
    }

    pub fn name(&self) -> &str {
        match self.label.split_once('/') {
            Some((_, name)) => name,
            None => &self.label,
        }
    }
}

fn sanitize(text: &str, forbidden: &[char]) -> String {
    text.chars()
        .map(|c| if forbidden.contains(&c) { '_' } else { c })
        .collect()
}

fn infer_service(label: &str) -> &str {
    if let Some((service, _)) = label.split_once('/') {
        return service;
    }
    if let Some(rest) = label.strip_prefix("OP") {
        let letters = rest
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(rest.len());
        let digits = &rest[letters..];
        if letters > 0 && !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
            return &rest[..letters];
        }
    }
    label
}

impl fmt::Display for OperationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl fmt::Debug for OperationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)
    }
}

impl TryFrom<String> for OperationId {
    type Error = MspError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<OperationId> for String {
    fn from(value: OperationId) -> Self {
        value.label
    }
}

impl std::str::FromStr for OperationId {
    type Err = MspError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

/// Set of operation labels a key parser may resolve against.
#[derive(Clone, Debug, Default)]
pub struct OpRegistry {
    known: BTreeSet<OperationId>,
    auto_register: bool,
}

impl OpRegistry {
    /// A registry that accepts any well-formed label and remembers it.
    pub fn auto() -> Self {
        Self {
            known: BTreeSet::new(),
            auto_register: true,
        }
    }

    /// A registry that only resolves the given operations.
    pub fn closed<I: IntoIterator<Item = OperationId>>(ops: I) -> Self {
        Self {
            known: ops.into_iter().collect(),
            auto_register: false,
        }
    }

    pub fn resolve(&mut self, label: &str) -> Result<OperationId, MspError> {
        let op = OperationId::new(label)?;
        if self.known.contains(&op) {
            return Ok(op);
        }
        if !self.auto_register {
            return Err(MspError::UnknownOperation(op.label));
        }
        self.known.insert(op.clone());
        Ok(op)
    }

    pub fn operations(&self) -> impl Iterator<Item = &OperationId> {
        self.known.iter()
    }
}

/// An ordered operation chain starting at the operation the entry-point calls.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchKey(Vec<OperationId>);

impl BranchKey {
    pub fn new(ops: Vec<OperationId>) -> Result<Self, MspError> {
        if ops.is_empty() {
            return Err(MspError::EmptyKey);
        }
        let mut seen = BTreeSet::new();
        for op in &ops {
            if !seen.insert(op.label()) {
                return Err(MspError::LoopInKey(op.label().to_owned()));
            }
        }
        Ok(Self(ops))
    }

    /// Parses `OPD1;OPB2` (or `OPD1:OPB2`), resolving labels in `registry`.
    pub fn parse(text: &str, registry: &mut OpRegistry) -> Result<Self, MspError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(MspError::EmptyKey);
        }
        let ops = text
            .split([KEY_SEPARATOR, ALT_KEY_SEPARATOR])
            .map(|segment| {
                if segment.trim().is_empty() {
                    Err(MspError::EmptySegment(text.to_owned()))
                } else {
                    registry.resolve(segment)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(ops)
    }

    pub fn ops(&self) -> &[OperationId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn root(&self) -> &OperationId {
        &self.0[0]
    }

    pub fn last(&self) -> &OperationId {
        &self.0[self.0.len() - 1]
    }

    pub fn contains(&self, op: &OperationId) -> bool {
        self.contains_label(op.label())
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.0.iter().any(|o| o.label() == label)
    }

    /// The length-`len` prefix, `None` when `len` is 0 or exceeds the key.
    pub fn prefix(&self, len: usize) -> Option<BranchKey> {
        (1..=self.0.len())
            .contains(&len)
            .then(|| BranchKey(self.0[..len].to_vec()))
    }

    /// The key one step shorter, `None` for a root key.
    pub fn parent(&self) -> Option<BranchKey> {
        self.prefix(self.0.len() - 1)
    }

    /// Appends `op`, rejecting it if it already occurs in the chain.
    pub fn child(&self, op: OperationId) -> Result<BranchKey, MspError> {
        if self.contains(&op) {
            return Err(MspError::LoopInKey(op.label));
        }
        let mut ops = self.0.clone();
        ops.push(op);
        Ok(BranchKey(ops))
    }

    /// The service issuing the request on the final edge of the key.
    pub fn caller<'a>(&'a self, entry_label: &'a str) -> &'a str {
        match self.0.len() {
            1 => entry_label,
            n => self.0[n - 2].service(),
        }
    }
}

impl From<OperationId> for BranchKey {
    fn from(op: OperationId) -> Self {
        BranchKey(vec![op])
    }
}

impl std::str::FromStr for BranchKey {
    type Err = MspError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, &mut OpRegistry::auto())
    }
}

impl fmt::Display for BranchKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "{KEY_SEPARATOR}")?;
            }
            f.write_str(op.label())?;
        }
        Ok(())
    }
}

impl fmt::Debug for BranchKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BranchKey({self})")
    }
}

/// Returns the service issuing the final request of `key`.
pub fn caller_of<'a>(key: &'a BranchKey, entry_label: &'a str) -> &'a str {
    key.caller(entry_label)
}
