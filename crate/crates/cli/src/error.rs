use serde_json::json;
use thiserror::Error;

pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] blup_core::Error),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Parse { .. } | CliError::Input(_) => "domain",
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Verification(_) => "verification",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(blup_core::Error::Domain(_)) => EXIT_DOMAIN,
            CliError::Core(blup_core::Error::OptimizerConvergence { .. }) => EXIT_VERIFICATION,
            CliError::Core(_) => EXIT_NUMERICAL,
            CliError::Verification(_) => EXIT_VERIFICATION,
            CliError::Parse { .. }
            | CliError::Input(_)
            | CliError::Usage(_)
            | CliError::Io { .. } => EXIT_DOMAIN,
        }
    }

    /// Single-line JSON written to standard error.
    pub fn to_json_line(&self) -> String {
        let mut error = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Parse { line, .. } = self {
            error["line"] = json!(line);
        }
        json!({ "schema_version": blup_core::SCHEMA_VERSION, "error": error }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
