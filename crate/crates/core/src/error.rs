use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("index {index} out of range for {what} (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("{what} count {requested} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: String,
        cap: usize,
    },

    #[error("loss {value} for expert {index} is outside [0, 1]")]
    LossOutOfRange { index: usize, value: f64 },

    #[error("expert already chosen in round {round}; update before choosing again")]
    AlreadyChosen { round: usize },

    #[error("round {round} out of range (horizon {horizon})")]
    RoundOutOfRange { round: usize, horizon: usize },

    #[error("mixing refuted: delta_max = {delta_max} at policy {policy}, model {model}")]
    MixingRefuted {
        delta_max: f64,
        policy: usize,
        model: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Invalid {
        what,
        detail: detail.into(),
    }
}
