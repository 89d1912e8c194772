use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },

    #[error("mass must be positive, got {0}")]
    InvalidMass(f64),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("sector index {l} out of range for {n_cells} cells")]
    SectorOutOfRange { l: usize, n_cells: usize },

    #[error("requested {requested} bands but only {available} are available")]
    BandCount { requested: usize, available: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("degenerate state: max |u| = {0:e} is below the gauge threshold")]
    DegenerateState(f64),

    #[error("operators do not commute: ||[H, T]||_F = {0:e}")]
    NonCommuting(f64),

    #[error("operator is not Hermitian: defect {0:e}")]
    NotHermitian(f64),

    #[error("unsupported derivative scheme: {0}")]
    UnsupportedScheme(String),

    #[error("missing Bloch state for band {band}, sector {l}")]
    MissingState { band: usize, l: usize },

    #[error("Bloch state band {band}, sector {l} is not gauge-fixed")]
    UnfixedGauge { band: usize, l: usize },

    #[error("site {site} out of range for {n_cells} cells")]
    InvalidSite { site: usize, n_cells: usize },

    #[error("grid index {index} out of range for {total} points")]
    IndexOutOfRange { index: usize, total: usize },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}
