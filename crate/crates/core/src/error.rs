use thiserror::Error;

/// Errors raised by the symbolic engine and the procedures built on it.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown function symbol `{0}`")]
    UnknownSymbol(String),
    #[error("jet index {index} exceeds the configured cap {max}")]
    JetOverflow { index: usize, max: usize },
    #[error("symbol `{symbol}` has no derivative rule for argument {arg}")]
    MissingDerivativeRule { symbol: String, arg: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("fractional power of a negative number")]
    NegativeFractionalPower,
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("irreducible at order {order}: density is not affine in its top derivative")]
    Irreducible { order: usize },
    #[error("no closed form: cannot integrate {residual} with respect to {variable}")]
    NoClosedForm { residual: String, variable: String },
    #[error("not a conservation-law density: D_t rho is not a total x-derivative")]
    NotADensity,
    #[error("degenerate transformation: {0}")]
    Degenerate(String),
    #[error("contact condition violated: residual {0}")]
    ContactViolated(String),
    #[error("coordinate inversion failed: {reason}; untransformed expression: {expression}")]
    Inversion { reason: String, expression: String },
    #[error("U required: the equation X_x U_u - X_u U_x = rho_u is outside the built-in quadrature cases")]
    URequired,
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("invalid problem file: {0}")]
    Problem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
