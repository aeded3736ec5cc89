use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Bond disorder wide enough to flip the sign of a coupling.
    #[error("bond disorder width {width} >= coupling {coupling}: couplings could turn antiferromagnetic")]
    BondSignFlip { width: f64, coupling: f64 },

    #[error("system of {n} spins exceeds the dense state-vector cap of {cap}")]
    SystemTooLarge { n: usize, cap: usize },

    /// Norm drift beyond tolerance after an evolution segment.
    #[error("integrator did not converge: norm drift {drift:e} exceeds {tolerance:e}")]
    IntegratorDivergence { drift: f64, tolerance: f64 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// Operation asked outside the mathematical domain it is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// The measurement operating point carries no information about the signal.
    #[error("signal not identifiable: {0}")]
    Unidentifiable(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
