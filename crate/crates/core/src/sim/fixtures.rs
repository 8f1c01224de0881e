//! Built-in example snapshots.
//!
//! `mce0`, `mce1` and `mce2` share the same topology (entry-point plus
//! services A to G); `mce2` carries an order of magnitude more traffic on
//! path 1. `p3-sample` is a standalone single-path example.

use std::fmt;
use std::str::FromStr;

use crate::msp::{BranchKey, PathId, Snapshot};

use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FixtureId {
    Mce0,
    Mce1,
    Mce2,
    P3Sample,
}

impl FixtureId {
    pub const ALL: [FixtureId; 4] = [
        FixtureId::Mce0,
        FixtureId::Mce1,
        FixtureId::Mce2,
        FixtureId::P3Sample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureId::Mce0 => "mce0",
            FixtureId::Mce1 => "mce1",
            FixtureId::Mce2 => "mce2",
            FixtureId::P3Sample => "p3-sample",
        }
    }

    pub fn rows(self) -> &'static [(PathId, &'static str, u64)] {
        match self {
            FixtureId::Mce0 => MCE0,
            FixtureId::Mce1 => MCE1,
            FixtureId::Mce2 => MCE2,
            FixtureId::P3Sample => P3_SAMPLE,
        }
    }
}

impl fmt::Display for FixtureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FixtureId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| SimError::UnknownFixture(s.to_owned()))
    }
}

const MCE0: &[(PathId, &str, u64)] = &[
    (1, "OPA1", 32),
    (1, "OPA1:OPB1", 20),
    (1, "OPA1:OPB1:OPC1", 18),
    (2, "OPD2", 65),
    (2, "OPD2:OPB1", 44),
    (2, "OPD2:OPB1:OPC1", 41),
    (3, "OPD1", 23),
    (3, "OPD1:OPB2", 20),
    (3, "OPD1:OPG1", 12),
    (3, "OPD1:OPB2:OPE1", 15),
    (4, "OPF1", 52),
    (4, "OPF1:OPE1", 43),
];

const MCE1: &[(PathId, &str, u64)] = &[
    (1, "OPA1", 60),
    (1, "OPA1:OPB1", 42),
    (1, "OPA1:OPB1:OPC1", 42),
    (2, "OPD2", 23),
    (2, "OPD2:OPB1", 18),
    (2, "OPD2:OPB1:OPC1", 14),
    (3, "OPD1", 59),
    (3, "OPD1:OPB2", 48),
    (3, "OPD1:OPG1", 44),
    (3, "OPD1:OPB2:OPE1", 33),
    (4, "OPF1", 21),
    (4, "OPF1:OPE1", 20),
];

const MCE2: &[(PathId, &str, u64)] = &[
    (1, "OPA1", 400),
    (1, "OPA1:OPB1", 340),
    (1, "OPA1:OPB1:OPC1", 290),
    (2, "OPD2", 38),
    (2, "OPD2:OPB1", 36),
    (2, "OPD2:OPB1:OPC1", 27),
    (3, "OPD1", 40),
    (3, "OPD1:OPB2", 36),
    (3, "OPD1:OPG1", 28),
    (3, "OPD1:OPB2:OPE1", 10),
    (4, "OPF1", 34),
    (4, "OPF1:OPE1", 29),
];

const P3_SAMPLE: &[(PathId, &str, u64)] = &[
    (3, "OPD1", 45),
    (3, "OPD1;OPB2", 34),
    (3, "OPD1;OPG1", 24),
    (3, "OPD1;OPB2;OPE1", 20),
];

pub fn builtin_fixture(id: FixtureId) -> Snapshot {
    Snapshot::build(id.rows().iter().map(|&(path, key, count)| {
        let key: BranchKey = key.parse().expect("fixture keys are valid");
        (path, key, count)
    }))
    .expect("fixtures are valid snapshots")
}
