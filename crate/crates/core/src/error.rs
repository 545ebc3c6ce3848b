use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Operand shapes violate the operation's contract.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("input is not symmetric: ||Z - Z^T||_F = {deviation:e} exceeds {tolerance:e}")]
    Asymmetric { deviation: f64, tolerance: f64 },

    #[error("{kernel} did not converge after {iterations} iterations (residual {residual:e})")]
    DecompositionFailed {
        kernel: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("degenerate spectrum: values {i} and {j} differ by {gap:e} < {min_gap:e}")]
    DegenerateSpectrum {
        i: usize,
        j: usize,
        gap: f64,
        min_gap: f64,
    },

    #[error("rank deficient: smallest singular value {sigma_min:e} <= {min_gap:e}")]
    RankDeficient { sigma_min: f64, min_gap: f64 },

    #[error("{function} is undefined at {argument:e}")]
    Domain {
        function: &'static str,
        argument: f64,
    },

    #[error("affinity entry W[{row}, {col}] = {value:e} is not positive")]
    AffinityDomain { row: usize, col: usize, value: f64 },

    #[error("pixel {row} has zero total affinity")]
    DisconnectedPixel { row: usize },

    #[error("cluster {cluster} is empty or has zero degree")]
    EmptyCluster { cluster: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("probe at entry ({row}, {col}) failed: {source}")]
    Probe {
        row: usize,
        col: usize,
        source: Box<Error>,
    },

    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    TrainingFailure {
        epoch: usize,
        step: usize,
        loss: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
