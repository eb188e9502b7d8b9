use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("subsystem `{label}` has invalid dimension {dim} (must be >= 2)")]
    InvalidDimension { label: String, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("Kraus set is not trace-preserving (deviation {0:.3e})")]
    KrausIncomplete(f64),
    #[error("projector set is not orthogonal and complete (deviation {0:.3e})")]
    IncompleteProjectors(f64),
    #[error("partial trace needs at least one subsystem to keep")]
    EmptyKeep,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("time bin `{0}` is already present in the state")]
    BinOccupied(String),
    #[error("both time bins are occupied (population {0:.3e}); input is outside the single-photon subspace")]
    BothBinsOccupied(f64),
    #[error("port {0} is timing-based and has no projector")]
    TimingPort(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("inconsistent sequence timing: {0}")]
    Timing(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("record error at line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("{value} is not a probability in [0, 1]"),
        });
    }
    Ok(())
}
