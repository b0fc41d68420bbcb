use thiserror::Error;

/// Errors raised by pattern construction and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interfaces must be strictly increasing (z[{index}] = {left} >= z[{}] = {right})", index + 1)]
    NonIncreasing { index: usize, left: f64, right: f64 },

    #[error("value {value} is outside {domain}")]
    OutOfRange { value: f64, domain: &'static str },

    #[error("mass mismatch: computed {computed}, expected {expected}")]
    MassMismatch { computed: f64, expected: f64 },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("expected a positive value, got {0}")]
    NonPositive(f64),

    #[error("quadrature did not reach tolerance {tolerance:e} on [{a}, {b}] within depth {depth}")]
    ToleranceNotMet { a: f64, b: f64, tolerance: f64, depth: usize },

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("damping could not keep the iterate ordered inside (-1, 1) (residual {residual:e})")]
    LeftDomain { residual: f64 },

    #[error("continuation lost the branch near gamma = {gamma}")]
    BranchLost { gamma: f64 },

    #[error("z1 = {z1} is on an asymptote of the gamma curve (denominator {denominator:e})")]
    Asymptote { z1: f64, denominator: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("elementary move leaves the ordered region: {0}")]
    OrderingViolated(String),

    #[error("sweep did not settle within {cycles} cycles")]
    CycleLimit { cycles: usize },

    #[error("no energy-decreasing escape from the boundary at gamma = {gamma}")]
    NoEscape { gamma: f64 },

    #[error("pattern is not a critical point (residual {residual:e} > {tolerance:e})")]
    NotCritical { residual: f64, tolerance: f64 },

    #[error("unknown {family} strategy '{name}' (available: {available})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        available: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ToleranceNotMet { .. }
                | Error::NoConvergence { .. }
                | Error::LeftDomain { .. }
                | Error::BranchLost { .. }
                | Error::CycleLimit { .. }
                | Error::NoEscape { .. }
        )
    }
}
