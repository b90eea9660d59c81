use thiserror::Error;

/// Errors raised by the physics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// `2η ≥ Δ_a`: the driven cavity is parametrically unstable.
    #[error("unstable drive: 2*eta = {two_eta} >= delta_a = {delta_a}")]
    UnstableDrive { delta_a: f64, two_eta: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bound-state solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no positive bound-state detuning exists (Delta = {delta}, coupling = {coupling})")]
    NoBoundState { delta: f64, coupling: f64 },

    #[error("no bound state resolved above the band edge on the finite array")]
    BoundStateUnresolved,

    #[error("not dispersive: Delta = {0} must be > 0")]
    NotDispersive(f64),

    #[error("protocol time undefined for zero coupling")]
    ZeroCoupling,

    #[error("integrator error: {0}")]
    Integrator(String),

    #[error("operator too large: {nnz} nonzeros exceeds cap {cap}")]
    OperatorTooLarge { nnz: usize, cap: usize },

    #[error("truncation error {error:e} at n_max = {n_max} exceeds {limit:e} for r = {r}")]
    Truncation { r: f64, n_max: usize, error: f64, limit: f64 },

    #[error("regime check failed: {0}")]
    RegimeViolated(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Self::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
