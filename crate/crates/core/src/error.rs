use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("incompatible tuples: d = {left} vs d = {right}")]
    IncompatibleTuples { left: usize, right: usize },

    #[error("variable count mismatch: {left} vs {right}")]
    VariableCount { left: usize, right: usize },

    #[error("matrix is singular to working precision (smallest singular value {smin:e}, largest {smax:e})")]
    Singular { smin: f64, smax: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outside domain of convergence: {0}")]
    OutsideDomain(String),

    #[error("delta(T) not strictly contractive at scale s: ||delta(T)/s|| = {t}")]
    NotContractive { t: f64 },

    #[error("aliasing not controlled: {0}")]
    Aliasing(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("empty sample set: {0}")]
    EmptySampleSet(String),

    #[error("unknown {kind} `{name}` (known: {known})")]
    Unknown { kind: &'static str, name: String, known: String },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
