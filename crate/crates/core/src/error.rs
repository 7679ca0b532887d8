use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("non-finite value while evaluating {0}")]
    NumericRange(&'static str),
    #[error("branch cut crossed in {0}")]
    BranchCut(&'static str),
    #[error("no open decay channel")]
    NoChannel,
    #[error("theta = {0} outside [0, pi/4)")]
    ThetaOutOfRange(f64),
    #[error("unsupported stencil order {0}")]
    UnsupportedStencil(usize),
    #[error("quadrature not converged: doubling changed entries by {0:e}")]
    Quadrature(f64),
    #[error("eigensolver did not converge: {0}")]
    EigenNotConverged(String),
    #[error("self-orthogonal vector (c-norm {0:e})")]
    DegenerateNormalization(f64),
    #[error("no resonance in the energy window")]
    NoResonance,
    #[error("continuation lost at theta = {theta} (best overlap {overlap:.3})")]
    TrackingLoss { theta: f64, overlap: f64 },
    #[error("grid mismatch")]
    GridMismatch,
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("occupation mismatch: {0}")]
    Occupation(String),
    #[error("phase unwrap ambiguous: |n| vanishes near x = {0}")]
    Unwrap(f64),
    #[error("density tail not monotonic in the fit window")]
    NonMonotonicTail,
    #[error("window [{0}, {1}] not usable on this grid")]
    Window(f64, f64),
    #[error("SCF input not converged")]
    Unconverged,
    #[error("no occupied orbital")]
    NoHomo,
    #[error("state not normalizable along the real axis")]
    Normalizability,
    #[error("continuation path passes through zero")]
    PathThroughZero,
    #[error("quadrature and closed form disagree by {0:e}")]
    Discretization(f64),
}

impl Error {
    pub(crate) fn invalid(msg: &str) -> Self {
        Error::Invalid(String::from(msg))
    }
}
