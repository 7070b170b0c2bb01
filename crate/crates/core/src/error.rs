use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("index out of range in record at line {line}: {msg}")]
    Index { line: usize, msg: String },

    #[error("non-finite value at line {line}")]
    Value { line: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("basis is not orthogonal (deviation {deviation:.3e})")]
    Basis { deviation: f64 },

    #[error("no convergence after {iterations} iterations (best residual {best_residual:.3e})")]
    Convergence { iterations: usize, best_residual: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("reference weight |c0| = {c0:.3e} is at or below the threshold {threshold}")]
    ReferenceDegeneracy { c0: f64, threshold: f64 },

    #[error("orbital {orbital} has eigenvalue {value:.3e} below the positivity floor")]
    Positivity { orbital: usize, value: f64 },

    #[error("missing data: {0}")]
    MissingData(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("distribution sums to {sum}, expected 1")]
    Normalization { sum: f64 },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("macro iteration {iteration}: {source}")]
    MacroIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable short name of the variant, for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Index { .. } => "index",
            Error::Value { .. } => "value",
            Error::Io(_) => "io",
            Error::Domain(_) => "domain",
            Error::Basis { .. } => "basis",
            Error::Convergence { .. } => "convergence",
            Error::Capacity(_) => "capacity",
            Error::ReferenceDegeneracy { .. } => "reference-degeneracy",
            Error::Positivity { .. } => "positivity",
            Error::MissingData(_) => "missing-data",
            Error::Dimension(_) => "dimension",
            Error::Normalization { .. } => "normalization",
            Error::Partition(_) => "partition",
            Error::Numerical(_) => "numerical",
            Error::MacroIteration { source, .. } => source.kind(),
        }
    }
}
