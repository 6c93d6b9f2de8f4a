use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {value} outside domain of {what}: {detail}")]
    Domain {
        what: &'static str,
        value: f64,
        detail: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("overflow in {family}: {detail}")]
    Overflow { family: String, detail: String },

    #[error("{module}: budget of {budget} exceeded (partial estimate {partial_re} + {partial_im}i)")]
    BudgetExceeded {
        module: &'static str,
        budget: u64,
        partial_re: f64,
        partial_im: f64,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("bracket endpoints classify the same ({0})")]
    Bracket(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("evaluator signalled an infinite value: {0}")]
    Infinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            detail: detail.into(),
        }
    }
}
