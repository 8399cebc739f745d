use thiserror::Error;

use crate::scenario::Diagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("scenario validation failed:\n{}", format_diagnostics(.0))]
    Validation(Vec<Diagnostic>),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("region `{0}` contains no samples")]
    EmptyRegion(String),
    #[error("grid lattices differ: {0}")]
    LatticeMismatch(String),
    #[error("unknown {kind} `{id}`")]
    UnknownEntity { kind: &'static str, id: String },
    #[error("malformed grid file: {0}")]
    GridFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn unknown(kind: &'static str, id: impl Into<String>) -> Self {
        Error::UnknownEntity {
            kind,
            id: id.into(),
        }
    }

    /// Whether the error comes from bad input data rather than the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}
