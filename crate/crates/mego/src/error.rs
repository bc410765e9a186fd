//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tensor or solution had the wrong shape for the operation.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: String,
        expected: String,
        got: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A gradient contained NaN or infinity; the optimizer refuses to step.
    #[error("non-finite gradient in {context}")]
    NonFiniteGradient { context: String },

    /// `backward` needs batch statistics, which only train-mode tapes record.
    #[error("backward called on an eval-mode tape")]
    EvalTapeBackward,

    /// The instance's function-evaluation budget is spent.
    #[error("FE budget exhausted: {consumed} of {budget} consumed")]
    BudgetExhausted { consumed: u64, budget: u64 },

    /// An external or simulated evaluator failed. No FE is charged.
    #[error("evaluator error: {0}")]
    Evaluator(String),

    /// A multi-evaluation operation failed part-way; `trace` holds the
    /// `(fe_index, raw_y)` pairs recorded before the failure.
    #[error("run aborted after {} evaluations: {source}", trace.len())]
    Aborted {
        trace: Vec<(u64, f64)>,
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub fn shape(context: impl Into<String>, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
