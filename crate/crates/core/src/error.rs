use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("density matrix is not positive (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace} differs from target {target}")]
    TraceMismatch { trace: f64, target: f64 },

    #[error("eigensolver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("function is not finite at eigenvalue {eigenvalue}")]
    Domain { eigenvalue: f64 },

    #[error("operator is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("energy {energy:.3e} lies inside the zero-mode threshold, no partner state exists")]
    ZeroMode { energy: f64 },

    #[error("vector is not an eigenvector of h1 (residual {residual:.3e})")]
    NotEigenvector { residual: f64 },

    #[error("density matrix mixes zero modes with the positive sector (residual {residual:.3e})")]
    ZeroModeMixing { residual: f64 },

    #[error("overlap matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("integration produced non-finite values at step {step}")]
    Divergence { step: usize },

    #[error("exact propagation requires constant dissipator profiles")]
    TimeDependentProfile,

    #[error("dimension {dim} exceeds the superoperator limit {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("q- has {count} zero mode(s); use the projected supercharge dissipator instead")]
    ZeroModesPresent { count: usize },

    #[error("{0}")]
    Invalid(String),
}
