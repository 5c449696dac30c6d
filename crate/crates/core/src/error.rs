use thiserror::Error;

/// Errors raised while building gambles or computing their riskiness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    /// The input violates the gamble preconditions (positive mean, loss mass,
    /// normalized and strictly positive density).
    #[error("not a gamble: {reason}")]
    NotAGamble { reason: String },

    #[error("lambda {lambda} outside the admissible range [0, {max}]")]
    OutOfDomain { lambda: f64, max: f64 },

    /// `phi(1/L)` is within its own error bound of zero, so the regime
    /// cannot be decided at the requested tolerance.
    #[error("sign of phi at 1/L is ambiguous: value {value:e}, error bound {bound:e}")]
    BoundarySignAmbiguous { value: f64, bound: f64 },

    /// The level-`n` dyadic discretization does not have a positive mean yet.
    #[error("dyadic level {n} does not yet define a gamble (mean {mean})")]
    NotYetAGamble { n: u32, mean: f64 },

    #[error("node {node} is not a gamble for its information set: {reason}")]
    NotConditionalGamble { node: String, reason: String },

    #[error("tree shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid simulation spec: {0}")]
    SpecInvalid(String),

    #[error("need at least {need} acceptance events, have {have}")]
    InsufficientEvents { have: u64, need: u64 },

    #[error("acceptance wealth bound is not certifiable on an unbounded support")]
    UnboundedGamble,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl RiskError {
    pub(crate) fn not_a_gamble(reason: impl Into<String>) -> Self {
        RiskError::NotAGamble {
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for RiskError {
    fn from(e: serde_json::Error) -> Self {
        RiskError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RiskError>;
