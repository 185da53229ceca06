use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::BootstrapSample;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parameter outside the model domain at observation {index}")]
    Domain { index: usize },

    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence {
        last: Vec<f64>,
        iterations: usize,
        residual: f64,
    },

    #[error("singular system (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("no start converged")]
    EmptyRootSet,

    #[error("degenerate run: {fallback} of {total} resamples fell back to the full-data estimate")]
    DegenerateRun {
        fallback: usize,
        total: usize,
        sample: Box<BootstrapSample>,
    },

    #[error("insufficient sample: need at least {needed}, found {found}")]
    InsufficientSample { needed: usize, found: usize },
}
