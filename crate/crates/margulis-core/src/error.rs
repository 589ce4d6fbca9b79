use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("subspaces are not transverse: {0}")]
    NotTransverse(String),
    #[error("restricted form has the wrong signature")]
    WrongSignature,
    #[error("parts do not form a direct sum")]
    NotDirectSum,
    #[error("matrix is not in the Lie algebra (residual {0:e})")]
    NotInLieAlgebra(f64),
    #[error("matrix does not preserve the form (residual {0:e})")]
    NotOrthogonalForForm(f64),
    #[error("determinant {0} is not +1")]
    NegativeDeterminant(f64),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("element is not proximal: {0}")]
    NotProximal(String),
    #[error("mid eigenvalues are not real")]
    ComplexMidEigenvalues,
    #[error("neutral eigenvalue is not simple")]
    NeutralNotSimple,
    #[error("intersection has dimension {0}, expected 1")]
    BadIntersectionDim(usize),
    #[error("affine planes do not meet")]
    EmptyIntersection,
    #[error("degenerate denominator {0:e}")]
    DegenerateDenominator(f64),
    #[error("step {0:e} leaves the proximal locus")]
    StepTooLarge(f64),
    #[error("word is not freely reduced at position {0}")]
    NotReduced(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
}
