use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate symbol name `{0}`")]
    DuplicateName(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("rewrite target for `{0}` must be even and free of odd generators")]
    OddRewrite(String),
    #[error("rewrite target for `{0}` refers to a rewritten parameter")]
    NestedRewrite(String),
    #[error("too many generators ({0}); at most 64 are supported")]
    TooManyGenerators(usize),
    #[error("chart mismatch")]
    ChartMismatch,
    #[error("chart is already an extension")]
    AlreadyExtended,
    #[error("operation requires a ΠT-extended chart")]
    NotPit,
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("mixed parity: {0}")]
    MixedParity(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid denominator: {0}")]
    InvalidDenominator(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
