use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("negative decoration {n} on edge {edge}")]
    NegativeDecoration { edge: usize, n: i64 },
    #[error("edge index {0} out of range")]
    InvalidEdgeIndex(usize),
    #[error("vertex index {0} out of range")]
    InvalidVertexIndex(usize),
    #[error("edge {0} is a self-loop and cannot be contracted")]
    SelfLoopContraction(usize),
    #[error("graph has a self-loop on edge {0}")]
    SelfLoopPresent(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("seed sets overlap")]
    SeedsOverlap,
    #[error("graph is not simple")]
    NotSimple,
    #[error("graph carries nonzero decorations")]
    Decorated,
    #[error("graph does not have the required two-vertex banana shape: {0}")]
    WrongShape(String),
    #[error("weight {0} must be even and at least 2")]
    OddWeight(i64),
    #[error("unsupported argument: {0}")]
    Unsupported(String),
    #[error("exact evaluation supports at most {max} edges, got {got}")]
    UnsupportedArity { got: usize, max: usize },
    #[error("point lies on the period lattice")]
    PoleAtLatticePoint,
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("invalid modular point: {0}")]
    InvalidModularPoint(String),
    #[error("matrix has determinant {0}, expected 1")]
    NotUnimodular(i64),
    #[error("invalid regularization window: eps={eps}, L={l}")]
    InvalidWindow { eps: f64, l: f64 },
    #[error("invalid control parameter: {0}")]
    InvalidControl(String),
    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudgetExceeded(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("method not supported for this graph: {0}")]
    MethodUnsupported(String),
    #[error("finite-difference step {h} too large for Im tau = {im}")]
    StepTooLarge { h: f64, im: f64 },
    #[error("ill-conditioned fit (condition number {0:.3e})")]
    IllConditionedFit(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::QuadratureBudgetExceeded(_)
                | Error::QuadratureFailure(_)
                | Error::IllConditionedFit(_)
                | Error::PoleAtLatticePoint
                | Error::MethodUnsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
