use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter failed its precondition (non-positive reactance, bad base, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The fault sequence is inconsistent or misses an element it needs.
    #[error("scenario definition: {0}")]
    Scenario(String),

    /// The closed-form time solution only holds when |a| > |b|.
    #[error(
        "closed form requires |a| > |b| (got a = {a}, b = {b}); the network has equilibria, \
         integrate numerically instead"
    )]
    ValidityDomain { a: f64, b: f64 },

    #[error("no equilibrium in the {0} network: {1}")]
    NoEquilibrium(String, String),

    #[error("bisection bracket not found: {0}")]
    BracketFailure(String),

    #[error("step size underflow at t = {t} s (last valid state delta = {delta} rad)")]
    IntegrationFailure { t: f64, delta: f64 },

    /// The terminal state is neither settled nor clearly diverging.
    #[error(
        "inconclusive terminal state at t = {t} s: delta = {delta} rad, delta_dot = {delta_dot} rad/s ({reason})"
    )]
    Inconclusive {
        t: f64,
        delta: f64,
        delta_dot: f64,
        reason: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
