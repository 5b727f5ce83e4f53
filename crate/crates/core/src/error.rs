use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataio: {0}")]
    Data(String),

    #[error("dataio: unknown column `{0}`")]
    UnknownColumn(String),

    #[error("dataio: non-numeric cell `{value}` in column `{column}` (row {row})")]
    NonNumeric { column: String, row: usize, value: String },

    #[error("dataio: binary column `{0}` has >2 levels")]
    BinaryLevels(String),

    #[error("dataio: column `{0}` is empty (all missing)")]
    EmptyColumn(String),

    #[error("glasso: {0}")]
    Solver(String),

    #[error("glasso: no convergence after {sweeps} sweeps (last change {change:.3e})")]
    NotConverged { sweeps: usize, change: f64 },

    #[error("tmvn: {0}")]
    Sampler(String),

    #[error("copulaem: {0}")]
    Em(String),

    #[error("copulatau: {0}")]
    Tau(String),

    #[error("simulate: {0}")]
    Simulation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
