use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative domain error: {0}")]
    DerivativeDomain(String),
    #[error("nondegeneracy error: {0}")]
    Nondegeneracy(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate plane: g(X,X)g(Y,Y) - g(X,Y)^2 = {0:e}")]
    PlaneDegeneracy(f64),
    #[error("rank failure: {0}")]
    Rank(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("classification refused: axioms failed ({0})")]
    AxiomsFailed(String),
    #[error("unknown catalog key '{key}'{}", suggestion.as_ref().map(|s| format!(", did you mean '{s}'?")).unwrap_or_default())]
    UnknownKey { key: String, suggestion: Option<String> },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
