use std::path::PathBuf;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] gebs_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed dataset; `row` counts data rows from 1, header excluded.
    #[error("{source_name}, row {row}: {message}")]
    Data {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// Process exit code: 2 for bad configuration or input, 3 for a
    /// degenerate run, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Data { .. } => 2,
            BenchError::Core(gebs_core::Error::Parameter(_) | gebs_core::Error::Unsupported(_)) => {
                2
            }
            BenchError::Core(gebs_core::Error::DegenerateRun { .. }) => 3,
            _ => 1,
        }
    }
}
