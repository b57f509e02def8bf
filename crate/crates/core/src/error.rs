use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bandlimit {0}: at least 4 is required")]
    InvalidBandlimit(usize),
    #[error("grid too coarse: degree {degree} exceeds the grid's exact degree {grid_degree}")]
    GridTooCoarse { degree: usize, grid_degree: usize },
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("bandlimit mismatch: {0} vs {1}")]
    BandlimitMismatch(usize, usize),
    #[error("degenerate conformal factor: min {min:e} vs max {max:e}")]
    DegenerateSection { min: f64, max: f64 },
    #[error("mapped section is not spacelike (min conformal factor {0:e})")]
    MappedSectionInvalid(f64),
    #[error("reference vector is not timelike future-pointing: {0:?}")]
    InvalidReferenceVector([f64; 4]),
    #[error("not a restricted Lorentz transformation: {0}")]
    NotRestrictedLorentz(String),
    #[error("balancing did not converge, residual {residual:e}")]
    BalanceFailed { residual: f64 },
    #[error("internal numerical error: {0}")]
    Internal(String),
    #[error("gradient monitor undefined: min H^2 = {0:e}")]
    MonitorUndefined(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("right-hand side has nonzero mean {0:e}")]
    InvalidRhs(f64),
    #[error("perturbation range too large: 1 + s f has minimum {0:e}")]
    SRangeTooLarge(f64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("generation failed: {0}")]
    GenerationFailed(String),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
