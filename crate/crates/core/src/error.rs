use thiserror::Error;

/// Failures raised anywhere in the construction and certification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    #[error("degenerate element {element} (measure {measure:e})")]
    DegenerateElement { element: usize, measure: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point ({x}, {y}) lies outside every source element")]
    PointLocationFailure { x: f64, y: f64 },

    #[error("eigen-solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigenvalue ratio {ratio} exceeds 1: meshes inconsistent with domain inclusion")]
    DomainOrderViolation { ratio: f64 },

    #[error("t = {t} outside the admissible range of M")]
    OutOfRange { t: f64 },

    #[error("invalid coefficient M: {0}")]
    InvalidCoefficient(String),

    #[error("M({t1}) = {m1} is not below M({t2}) = {m2}")]
    NotIncreasing { t1: f64, t2: f64, m1: f64, m2: f64 },

    #[error("no admissible tau after {attempts} halvings (target ratio {target})")]
    NoAdmissibleTau { attempts: usize, target: f64 },

    #[error("empty Theta interval ({lo}, {hi})")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("positivity failure: {0}")]
    PositivityFailure(String),

    #[error("could not bracket epsilon (reached {epsilon_lo:e})")]
    BracketFailure { epsilon_lo: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier used in reports and CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "InvalidGeometry",
            Error::MeshTooCoarse(_) => "MeshTooCoarse",
            Error::DegenerateElement { .. } => "DegenerateElement",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::PointLocationFailure { .. } => "PointLocationFailure",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DomainOrderViolation { .. } => "DomainOrderViolation",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::InvalidCoefficient(_) => "InvalidCoefficient",
            Error::NotIncreasing { .. } => "NotIncreasing",
            Error::NoAdmissibleTau { .. } => "NoAdmissibleTau",
            Error::EmptyInterval { .. } => "EmptyInterval",
            Error::PositivityFailure(_) => "PositivityFailure",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::LinearSolver(_) => "LinearSolver",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
