use std::fmt;

/// Errors produced by mesh handling, discretization, solvers and studies.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A requested (family, degree, order, ...) combination is not implemented.
    #[error("unsupported: {0}")]
    Capability(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("point {0:?} lies outside the reference tetrahedron")]
    OutsideReference([f64; 3]),

    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("singular matrix{}", SingularDetail(*.pivot, *.rcond))]
    Singular { pivot: Option<usize>, rcond: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no convergence after {iterations} iterations (gap between last two iterates {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("field evaluation failed in element {element}: {message}")]
    Evaluation { element: usize, message: String },

    #[error("coefficient bound violated at {point:?}: {message}")]
    Coefficient { point: [f64; 3], message: String },

    #[error("unsupported domain: {0}")]
    Topology(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct SingularDetail(Option<usize>, f64);

impl fmt::Display for SingularDetail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(p) => write!(f, " (zero pivot at index {p})"),
            None => write!(f, " (reciprocal condition estimate {:e})", self.1),
        }
    }
}

impl Error {
    /// True for failures caused by the numerics (singular systems, breakdowns)
    /// rather than by invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Numeric(_) | Error::NoConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
