use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("value norms differ between operands")]
    NormMismatch,
    #[error("partitions cover different domains")]
    IncomparableDomains,
    #[error("no Egorov witness in the given prefix: {0}")]
    NoWitness(String),
    #[error("function is not in the modular space: objective infinite on every probed scale")]
    NotInSpace,
    #[error("modular axiom violated: {0}")]
    AxiomViolation(String),
    #[error("wrong convexity class: {0}")]
    WrongConvexity(String),
    #[error("norm spec mode does not match the requested norm: {0}")]
    WrongMode(String),
    #[error("support escapes the partition")]
    DomainMismatch,
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("invalid refinement chain: {0}")]
    InvalidChain(String),
    #[error("norm is not declared order continuous")]
    NotOrderContinuous,
    #[error("map does not send the box into itself: {0}")]
    NotSelfMap(String),
    #[error("tolerance unreachable: {0}")]
    Unreachable(String),
    #[error("dimension limit exceeded: reduced dimension {dim} > {limit}")]
    DimensionLimit { dim: usize, limit: usize },
    #[error("retract is not idempotent: {0}")]
    NotIdempotent(String),
    #[error("external operator failed: {0}")]
    External(String),
}

impl Error {
    /// Stable kebab-case tag used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedInput(_) => "malformed-input",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NormMismatch => "norm-mismatch",
            Error::IncomparableDomains => "incomparable-domains",
            Error::NoWitness(_) => "no-witness",
            Error::NotInSpace => "not-in-space",
            Error::AxiomViolation(_) => "axiom-violation",
            Error::WrongConvexity(_) => "wrong-convexity-class",
            Error::WrongMode(_) => "wrong-mode",
            Error::DomainMismatch => "domain-mismatch",
            Error::BudgetExhausted(_) => "budget-exhausted",
            Error::InvalidChain(_) => "invalid-chain",
            Error::NotOrderContinuous => "not-order-continuous",
            Error::NotSelfMap(_) => "not-self-map",
            Error::Unreachable(_) => "tolerance-unreachable",
            Error::DimensionLimit { .. } => "dimension-limit",
            Error::NotIdempotent(_) => "not-idempotent",
            Error::External(_) => "external-operator",
        }
    }
}
