use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not hermitian: asymmetry {asymmetry:.3e} exceeds bound {bound:.3e}")]
    NotHermitian { asymmetry: f64, bound: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("algebras do not commute: basis pair (alice #{alice}, bob #{bob}) has commutator norm {norm:.3e}")]
    NonCommuting { alice: usize, bob: usize, norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("ambient dimension {dim} exceeds the configured limit {limit}")]
    SizeLimit { dim: usize, limit: usize },

    #[error("spectral probe stayed degenerate after {attempts} attempts")]
    DegenerateRandomization { attempts: usize },

    #[error("{0} algebra is abelian")]
    AbelianAlgebra(&'static str),

    #[error("corner algebra p A p is abelian (dimension {dim})")]
    AbelianCorner { dim: usize },

    #[error("vector is not cyclic: rank {rank} < ambient dimension {dim}")]
    NotCyclic { rank: usize, dim: usize },

    #[error("selection probability {probability:.3e} is below tolerance")]
    NullSelection { probability: f64 },

    #[error("{what} is not in its algebra (residual {residual:.3e})")]
    NotInAlgebra { what: String, residual: f64 },

    #[error("{what} has operator norm {norm:.6} > 1")]
    NormExceeded { what: String, norm: f64 },

    #[error("family element #{index} is not in the {side} algebra (residual {residual:.3e})")]
    FamilyNotInAlgebra { side: &'static str, index: usize, residual: f64 },

    #[error("Choi matrix is not positive (minimum eigenvalue {min_eig:.3e})")]
    NotCompletelyPositive { min_eig: f64 },

    #[error("map does not land in the {0} algebra")]
    WrongAlgebra(&'static str),

    #[error("operation requires a tensor-product system")]
    NotTensorSystem,

    #[error("normalization fails by {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid regions: {0}")]
    InvalidRegions(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the input rather than of the computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::InvariantViolation(_) | Error::NoConvergence(_) | Error::DegenerateRandomization { .. }
        )
    }
}
