use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] covpow::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 config or I/O, 3 model or domain, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        use covpow::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidInput(_)
                | E::DimensionMismatch { .. }
                | E::Io(_)
                | E::Json(_)
                | E::Csv(_) => 2,
                E::InvalidModel(_)
                | E::InsufficientData(_)
                | E::NotApplicable(_)
                | E::SplitLeak(_) => 3,
                E::NotPositiveDefinite { .. } | E::NonFinite | E::Numerical(_) => 4,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        use covpow::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => match e {
                E::InvalidInput(_) => "invalid_input",
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::Io(_) => "io",
                E::Json(_) => "json",
                E::Csv(_) => "csv",
                E::InvalidModel(_) => "invalid_model",
                E::InsufficientData(_) => "insufficient_data",
                E::NotApplicable(_) => "not_applicable",
                E::SplitLeak(_) => "split_leak",
                E::NotPositiveDefinite { .. } => "not_positive_definite",
                E::NonFinite => "non_finite",
                E::Numerical(_) => "numerical",
            },
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

/// One-line JSON printed to stderr on failure.
pub fn error_json(e: &CliError) -> String {
    serde_json::to_string(&ErrorReport {
        error: ErrorBody {
            kind: e.kind(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        },
    })
    .unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", e.kind()))
}
