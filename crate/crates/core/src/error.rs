use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates a structural invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// More sequences were requested than an orthonormal set of this length can hold.
    #[error("cannot fit {count} orthogonal pilots of length {length}")]
    InfeasibleOrthogonality { count: usize, length: usize },

    /// The requested target (estimation error, SINR, rate) cannot be met.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Scheme or pilot-book layout is inconsistent.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The estimator is undefined (zero pilot power).
    #[error("degenerate estimator: {0}")]
    DegenerateEstimator(String),

    #[error("zero-forcing needs more antennas than humans (M = {antennas}, K_h = {humans})")]
    ZfInfeasible { antennas: usize, humans: usize },

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("failed to parse scenario file: {0}")]
    TomlDe(#[from] toml::de::Error),

    #[error("failed to write scenario file: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
