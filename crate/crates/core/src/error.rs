use thiserror::Error;

/// Errors raised anywhere in the design pipeline.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("matrix is singular: lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e}{hint}")]
    Singular {
        lambda_min: f64,
        lambda_max: f64,
        hint: &'static str,
    },
    #[error("domain error: eigenvalue {eigenvalue:e} is outside the domain of {function}")]
    Domain {
        function: &'static str,
        eigenvalue: f64,
    },
    #[error("eigensolver did not converge after {iterations} iterations (off-diagonal norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DesignError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        DesignError::Argument(msg.into())
    }

    /// Process exit code for this error class: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            DesignError::Argument(_) | DesignError::Config(_) => 2,
            DesignError::Parse { .. } | DesignError::Data(_) | DesignError::Io { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T, E = DesignError> = std::result::Result<T, E>;
