use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("crack is not grid-conforming: {0}")]
    NonConformingCrack(String),

    #[error("crack has {found} connected components, more than the allowed {allowed}")]
    TooManyComponents { found: usize, allowed: usize },

    #[error("no admissible cover at this crack scale (threshold {threshold}): {reason}")]
    BudgetTooLarge { threshold: f64, reason: String },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("integrand kind has no closed-form conjugate: {0}")]
    UnsupportedKind(String),

    #[error("radius {radius} is not resolvable on a grid with h = {h}")]
    RadiusUnresolvable { radius: f64, h: f64 },

    #[error("degenerate exponent fit: {0}")]
    DegenerateFit(String),

    #[error("cover member is not resolvable: {0}")]
    UnresolvableCover(String),

    #[error("corrector compatibility violated: mean source {mean:e} exceeds {tol:e}")]
    CompatibilityViolated { mean: f64, tol: f64 },

    #[error("admissibility residual {residual:e} exceeds {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("crack family is empty")]
    EmptyFamily,

    #[error("probe point ({x}, {y}) lies outside the domain")]
    InvalidProbe { x: f64, y: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("eigen-iteration did not converge after {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("boundary datum induces no elastic energy")]
    ZeroElasticEnergy,

    #[error("configuration error{}: {message}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Config {
        location: Option<String>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code for the experiment runner, one per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::InvalidInput(_) => 3,
            Error::Io(_) => 4,
            Error::NonConformingCrack(_) | Error::TooManyComponents { .. } => 10,
            Error::BudgetTooLarge { .. } | Error::UnresolvableCover(_) => 11,
            Error::SingularSystem(_) => 12,
            Error::NoConvergence { .. } | Error::EigenNoConvergence { .. } => 13,
            Error::UnsupportedKind(_) => 14,
            Error::RadiusUnresolvable { .. } | Error::DegenerateFit(_) => 15,
            Error::CompatibilityViolated { .. } | Error::ResidualTooLarge { .. } => 16,
            Error::EmptyFamily | Error::InvalidProbe { .. } => 17,
            Error::InsufficientData(_) => 18,
            Error::ZeroElasticEnergy => 19,
        }
    }
}
