use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use breakrisk_core::sim::{builtin_fixture, FixtureId};
use breakrisk_core::{RiskMode, Snapshot};

use crate::ServiceError;

/// Where the served snapshot comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SnapshotSource {
    File(PathBuf),
    Fixture(FixtureId),
}

impl SnapshotSource {
    pub fn load(&self) -> Result<Snapshot, ServiceError> {
        match self {
            SnapshotSource::File(path) => Ok(Snapshot::load(path)?),
            SnapshotSource::Fixture(id) => Ok(builtin_fixture(*id)),
        }
    }
}

/// Shared handler state. The snapshot itself is immutable; a reload builds a
/// new one and swaps the pointer, so readers see either the old or the new
/// value in full.
#[derive(Debug)]
pub struct AppState {
    source: Option<SnapshotSource>,
    current: RwLock<Option<Arc<Snapshot>>>,
    default_mode: RiskMode,
}

impl AppState {
    /// State with nothing loaded; snapshot queries answer 503.
    pub fn unloaded(default_mode: RiskMode) -> Self {
        Self {
            source: None,
            current: RwLock::new(None),
            default_mode,
        }
    }

    pub fn with_snapshot(snapshot: Snapshot, default_mode: RiskMode) -> Self {
        Self {
            source: None,
            current: RwLock::new(Some(Arc::new(snapshot))),
            default_mode,
        }
    }

    pub fn from_source(
        source: SnapshotSource,
        default_mode: RiskMode,
    ) -> Result<Self, ServiceError> {
        let snapshot = source.load()?;
        Ok(Self {
            source: Some(source),
            current: RwLock::new(Some(Arc::new(snapshot))),
            default_mode,
        })
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn default_mode(&self) -> RiskMode {
        self.default_mode
    }

    pub fn replace(&self, snapshot: Snapshot) {
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(snapshot));
    }

    /// Re-reads the source. Returns `Ok(false)` when there is no source to
    /// re-read; on error the current snapshot stays in place.
    pub fn reload(&self) -> Result<bool, ServiceError> {
        let Some(source) = &self.source else {
            return Ok(false);
        };
        let fresh = source.load()?;
        self.replace(fresh);
        Ok(true)
    }
}
