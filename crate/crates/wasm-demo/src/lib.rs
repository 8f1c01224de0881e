//! WebAssembly bindings for the static what-if page in `www/`.
//!
//! The page loads a snapshot (a builtin fixture or a pasted MSP file), then
//! toggles breaking operations and reads the risk report and sweep back as
//! JSON strings in the same shapes the HTTP API returns.

use breakrisk_core::risk::SweepEntry;
use breakrisk_core::sim::{builtin_fixture, FixtureId};
use breakrisk_core::{risk, sweep_single_ops, BreakingSet, RiskMode, Snapshot};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// A loaded snapshot plus the queries the page runs against it.
#[wasm_bindgen]
pub struct Explorer {
    snapshot: Snapshot,
}

#[wasm_bindgen]
impl Explorer {
    #[wasm_bindgen(js_name = fromFixture)]
    pub fn from_fixture(id: &str) -> Result<Explorer, JsError> {
        Self::fixture(id).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = fromMsp)]
    pub fn from_msp(text: &str) -> Result<Explorer, JsError> {
        Self::msp(text).map_err(|e| JsError::new(&e))
    }

    /// Services, operations and paths for drawing the graph.
    pub fn summary(&self) -> String {
        serde_json::to_string(&self.snapshot.summary()).expect("summary serializes")
    }

    /// Risk report for a comma-separated operation list.
    #[wasm_bindgen(js_name = risk)]
    pub fn risk_js(&self, operations: &str, mode: &str) -> Result<String, JsError> {
        self.risk(operations, mode).map_err(|e| JsError::new(&e))
    }

    /// Single-operation sweep, highest score first.
    #[wasm_bindgen(js_name = sweep)]
    pub fn sweep_js(&self, mode: &str) -> Result<String, JsError> {
        self.sweep(mode).map_err(|e| JsError::new(&e))
    }
}

impl Explorer {
    pub fn fixture(id: &str) -> Result<Explorer, String> {
        let id: FixtureId = id
            .parse()
            .map_err(|e: breakrisk_core::sim::SimError| e.to_string())?;
        Ok(Explorer {
            snapshot: builtin_fixture(id),
        })
    }

    pub fn msp(text: &str) -> Result<Explorer, String> {
        Ok(Explorer {
            snapshot: Snapshot::from_json(text).map_err(|e| e.to_string())?,
        })
    }

    pub fn risk(&self, operations: &str, mode: &str) -> Result<String, String> {
        let mode: RiskMode = mode
            .parse()
            .map_err(|e: breakrisk_core::risk::RiskError| e.to_string())?;
        let set = BreakingSet::parse_list(operations).map_err(|e| e.to_string())?;
        if set.is_empty() {
            return Err("no operations selected".into());
        }
        Ok(risk(&self.snapshot, &set, mode)
            .map_err(|e| e.to_string())?
            .to_json())
    }

    pub fn sweep(&self, mode: &str) -> Result<String, String> {
        #[derive(Serialize)]
        struct Sweep {
            mode: RiskMode,
            sweep: Vec<SweepEntry>,
        }
        let mode: RiskMode = mode
            .parse()
            .map_err(|e: breakrisk_core::risk::RiskError| e.to_string())?;
        if self.snapshot.is_empty() {
            return Err("snapshot has no requests".into());
        }
        let sweep = sweep_single_ops(&self.snapshot, mode).map_err(|e| e.to_string())?;
        Ok(serde_json::to_string(&Sweep { mode, sweep }).expect("sweep serializes"))
    }
}

/// Ids accepted by `Explorer.fromFixture`, as a JSON array.
#[wasm_bindgen(js_name = fixtureIds)]
pub fn fixture_ids() -> String {
    let ids: Vec<&str> = FixtureId::ALL.iter().map(|id| id.as_str()).collect();
    serde_json::to_string(&ids).expect("ids serialize")
}
