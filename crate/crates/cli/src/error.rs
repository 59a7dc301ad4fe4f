use spinmer_core::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Parse(_) => 4,
            CliError::Solver(_) => 5,
            CliError::Io(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Parse(_) => "parse",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }

    /// `error kind=<kind> code=<n> message=<JSON string>` on one line.
    pub fn line(&self) -> String {
        let msg = serde_json::to_string(&self.to_string()).unwrap_or_else(|_| "\"\"".into());
        format!("error kind={} code={} message={msg}", self.kind(), self.exit_code())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parameter(_) => CliError::Config(msg),
            Error::Parse { .. } | Error::Integrity { .. } => CliError::Parse(msg),
            Error::Io(_) => CliError::Io(msg),
            Error::Dimension { .. }
            | Error::NotSymmetric { .. }
            | Error::NoConvergence { .. }
            | Error::SpinLabel { .. }
            | Error::Projector { .. }
            | Error::Sweep(_) => CliError::Solver(msg),
        }
    }
}
