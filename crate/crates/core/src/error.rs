use thiserror::Error;

/// Errors raised by the library.
///
/// Variants map one-to-one onto the failure modes callers are expected to
/// distinguish; the CLI turns them into exit code 1 plus a JSON report.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatDiscError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("degenerate disc: {0}")]
    DegenerateDisc(String),

    #[error("lift normalization failed: {0}")]
    Normalization(String),

    #[error("point is not reachable from the center: {0}")]
    NotReachable(String),

    #[error("evaluation hits the pole of the disc")]
    Pole,

    #[error("winding number undefined: min modulus {min_modulus:e} on the grid")]
    WindingUndefined { min_modulus: f64 },

    #[error("grid too coarse: phase step {step:.3} rad, retry with a larger grid")]
    Resolution { step: f64 },

    #[error("lift construction failed: {0}")]
    LiftConstruction(String),

    #[error("symbol is singular at grid node {node}")]
    SymbolSingular { node: usize },

    #[error("no adequate Laurent approximant: {0}")]
    Approximation(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("reduction chain mismatch at step '{step}': {detail}")]
    ReductionMismatch { step: String, detail: String },

    #[error("Newton did not converge after {iterations} iterations (last residual {last:e})")]
    NoConvergence { iterations: usize, last: f64, history: Vec<f64> },

    #[error("null-space dimension is ambiguous (no spectral gap)")]
    DimensionAmbiguous { singular_values: Vec<f64> },

    #[error("invalid tangent basis: {0}")]
    InvalidBasis(String),

    #[error("velocity map inversion failed on the target: {0}")]
    TargetInversion(String),
}

impl StatDiscError {
    /// Stable machine-readable tag, used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::InvalidInput(_) => "invalid-input",
            Self::InvalidParams(_) => "invalid-params",
            Self::SizeMismatch { .. } => "size-mismatch",
            Self::DegenerateDisc(_) => "degenerate-disc",
            Self::Normalization(_) => "normalization",
            Self::NotReachable(_) => "not-reachable",
            Self::Pole => "pole",
            Self::WindingUndefined { .. } => "winding-undefined",
            Self::Resolution { .. } => "resolution",
            Self::LiftConstruction(_) => "lift-construction",
            Self::SymbolSingular { .. } => "symbol-singular",
            Self::Approximation(_) => "approximation",
            Self::Factorization(_) => "factorization",
            Self::ReductionMismatch { .. } => "reduction-mismatch",
            Self::NoConvergence { .. } => "no-convergence",
            Self::DimensionAmbiguous { .. } => "dimension-ambiguous",
            Self::InvalidBasis(_) => "invalid-basis",
            Self::TargetInversion(_) => "target-inversion",
        }
    }
}

pub type Result<T> = std::result::Result<T, StatDiscError>;
