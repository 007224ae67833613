use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lambda must lie strictly between 1/2 and 1, got {0}")]
    InvalidLambda(f64),

    #[error("lambda {value} does not satisfy the multinacci equation of order {order} (residual {residual:e})")]
    InvalidMultinacciTag { value: f64, order: u32, residual: f64 },

    #[error("beta must lie in (1, 2], got {0}")]
    InvalidBeta(f64),

    #[error("level {n} exceeds the enumeration cap {cap}")]
    LevelTooLarge { n: usize, cap: usize },

    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("order {m} is outside the supported range {lo}..={hi}")]
    InvalidOrder { m: u32, lo: u32, hi: u32 },

    #[error("digit {0} is not binary")]
    InvalidDigit(u8),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("word count overflows 64 bits at length {n}")]
    Overflow { n: usize },

    #[error("beta {beta} is not the reciprocal of the multinacci number of order {m}")]
    MismatchedBeta { beta: f64, m: u32 },
}
