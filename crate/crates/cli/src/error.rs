use serde_json::json;

/// A failed command. Usage errors exit with 2, everything else with 1; the
/// JSON rendering goes to stderr.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    Threshold { total: f64, limit: f64 },
}

impl CliError {
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::Threshold { .. } => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let value = match self {
            CliError::Usage(message) => json!({"error": "usage", "message": message}),
            CliError::Runtime(message) => json!({"error": "runtime", "message": message}),
            CliError::Threshold { total, limit } => json!({
                "error": "threshold",
                "message": format!("total {total:.4} exceeds {limit}"),
                "total": total,
                "limit": limit,
            }),
        };
        value.to_string()
    }
}
