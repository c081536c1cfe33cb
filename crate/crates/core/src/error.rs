use thiserror::Error;

/// Failures raised by the numerical kernels, the field evaluation and the
/// experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("Jacobi sweeps did not converge (off-diagonal norm {off_norm:.3e} after {sweeps} sweeps)")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("Sylvester operator is singular (min eigenvalue sum {min_sum:.3e})")]
    DegenerateSpectrum { min_sum: f64 },

    #[error("invalid rank {rank} for a {rows}x{cols} matrix")]
    InvalidRank { rank: usize, rows: usize, cols: usize },

    #[error("restricted isometry constant must lie in [0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("gradient norm is zero; ratio undefined")]
    ZeroGradient,

    #[error("fit window has {0} points, need at least 5")]
    WindowTooShort(usize),

    #[error("loss gap is not positive at iteration {0}")]
    NonPositiveGap(usize),

    #[error("reference trajectory diverged")]
    ReferenceDiverged,

    #[error("defect {defect:.3e} at h = {h} is below the noise floor")]
    DefectBelowNoiseFloor { h: f64, defect: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
