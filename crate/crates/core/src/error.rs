use thiserror::Error;

use crate::synthesis::RealizabilityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, lengths, channel counts or grids that do not line up.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("window too narrow: edge amplitude ratio {edge_ratio:.3e} exceeds {edge_tol:.1e} (mass outside window {outside_mass:.3e})")]
    WindowTooNarrow {
        edge_ratio: f64,
        edge_tol: f64,
        outside_mass: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phase mismatch: {0}")]
    PhaseMismatch(String),

    #[error("target shapes are not physically realizable ({} violation range(s))", .0.violation_times.len())]
    NotRealizable(Box<RealizabilityReport>),

    #[error("excitation sector block ill-conditioned at t = {time} (condition number {condition:.3e}); widen the window")]
    SectorIllConditioned { time: f64, condition: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
