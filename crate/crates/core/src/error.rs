use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate vector is zero or not finite")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("evaluation magnitude {magnitude:e} is below {eps:e}; point lies numerically on a hyperplane")]
    NearKernel { magnitude: f64, eps: f64 },

    #[error("points coincide; no unique line through them")]
    DegeneratePair,

    #[error("line is contained in the hyperplane")]
    LineInHyperplane,

    #[error("matrix is singular or not finite")]
    SingularMatrix,

    #[error("point lies on the hyperplane at infinity of the domain chart")]
    OutsideChart,

    #[error("point is not on the boundary (defect {defect:e})")]
    NotOnBoundary { defect: f64 },

    #[error("point is not inside the domain")]
    PointOutsideDomain,

    #[error("no interior point of the slice found")]
    EmptySlice,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("map does not preserve the domain: {0}")]
    NotAnAutomorphism(String),

    #[error("sequence does not converge (last step {step:e})")]
    SequenceNotConverging { step: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("dual lower bound {lower:e} exceeds the computed distance {value:e} + error {error:e}")]
    InconsistentBounds { lower: f64, value: f64, error: f64 },

    #[error("spectral clustering is ambiguous at tolerance {tol:e} (gap {gap:e})")]
    IllConditioned { tol: f64, gap: f64 },

    #[error("starting point is within {delta:e} of the repelling point")]
    RepellerTooClose { delta: f64 },

    #[error("determinant is {det}, expected 1")]
    DetNotOne { det: f64 },

    #[error("map is not bi-proximal")]
    NotBiProximal,

    #[error("predicted magnitude {predicted:e} exceeds the overflow guard")]
    OverflowGuard { predicted: f64 },

    #[error("flag subspace {index} is not preserved (residual {residual:e})")]
    FlagNotPreserved { index: usize, residual: f64 },

    #[error("invalid flag: {0}")]
    InvalidFlag(String),

    #[error("domain is not star-shaped about the given center")]
    NotStarShaped,

    #[error("sample grid is too coarse: {0}")]
    GridTooCoarse(String),

    #[error("boundary graph is not scaling invariant (residual {residual:e})")]
    NotScalingInvariant { residual: f64 },

    #[error("boundary graph depends on the real tangent coordinate (derivative {derivative:e})")]
    XDependence { derivative: f64 },

    #[error("hermitian part is not positive definite")]
    NotPositiveDefinite,

    #[error("hermitian part does not dominate the symmetric part")]
    NotDominant,

    #[error("Takagi factorization residual {residual:e} too large")]
    TakagiFailure { residual: f64 },

    #[error("quadric has not been diagonalized")]
    NotDiagonalized,

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("invalid configuration field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },
}
