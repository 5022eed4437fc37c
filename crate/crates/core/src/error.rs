use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible configuration: {0}")]
    InfeasibleConfiguration(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("undefined QBER: no successful relay events")]
    UndefinedQber,

    /// The asymmetric closed form has a |η_A − η_B| denominator.
    #[error("transmissivities too close for the asymmetric closed form; use the symmetric one")]
    DeferToSymmetric,

    #[error("closed-form argument outside its domain: {0}")]
    FormulaDomain(String),

    #[error("degenerate measurement: {0}")]
    DegenerateMeasurement(String),

    #[error("no physical attack reproduces the excess noise: {0}")]
    InfeasibleNoise(String),

    #[error("undefined comparison: {0}")]
    UndefinedComparison(String),

    #[error("unknown curve `{0}`")]
    UnknownCurve(String),

    #[error("no records to write")]
    EmptyRecords,

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
