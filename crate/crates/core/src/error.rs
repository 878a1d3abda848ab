use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The value is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Exact computation would exceed the configured bit budget.
    #[error("bit budget exceeded: need about {needed} bits, budget is {budget}")]
    Budget { needed: u64, budget: u64 },
    #[error("factorization budget exhausted for {0}")]
    FactorizationBudget(String),
    /// Interval enclosures did not separate a rounding decision, even after
    /// the allowed number of precision doublings.
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("iteration guard tripped: {0}")]
    NonTermination(String),
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
