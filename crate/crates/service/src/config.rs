use std::net::SocketAddr;
use std::path::Path;

use breakrisk_core::RiskMode;
use serde::Deserialize;

use crate::ServiceError;

/// Service settings, read from a TOML file:
///
/// ```toml
/// listen = "127.0.0.1:8080"
/// cors_origin = "http://localhost:5173"
/// default_mode = "affected-paths"
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// Origin allowed by CORS, or `"*"`. No CORS headers when unset.
    pub cors_origin: Option<String>,
    /// Mode used when a request does not name one.
    pub default_mode: RiskMode,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            cors_origin: None,
            default_mode: RiskMode::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let err = |message: String| ServiceError::Config {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::from_toml(&text).map_err(|e| err(e.to_string()))
    }
}
