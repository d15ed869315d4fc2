use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {message}")]
    Config { message: String, path: Option<String> },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("{0} check(s) failed")]
    ChecksFailed(usize),

    #[error(transparent)]
    Core(#[from] rqco::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Core(rqco::Error::InvalidParameter(_)) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::ChecksFailed(_) => "check",
            CliError::Core(_) => "computation",
            CliError::Io(_) => "io",
            CliError::Csv(_) | CliError::Json(_) => "serialization",
        }
    }

    /// Machine-readable description printed on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Config { path: Some(p), .. } = self {
            body["key"] = json!(p);
        }
        json!({ "error": body })
    }
}
