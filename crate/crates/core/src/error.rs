use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("angle {0} is outside (0, pi/4)")]
    OutOfRange(String),

    #[error("cannot separate angle {0} from a range boundary at the maximum precision")]
    UndecidableRange(String),

    #[error("undecided at {bits} bits: {what}")]
    Undecided { what: String, bits: u32 },

    #[error("step budget of {0} exhausted")]
    StepBudgetExhausted(usize),

    #[error("malformed code: {0}")]
    MalformedCode(String),

    #[error("expected exactly one {kind} exceptional beam, found {found}")]
    CountViolation { kind: &'static str, found: usize },

    #[error("ghost completion length mismatch: domain gaps {domain}, range gaps {range}")]
    LengthMismatch { domain: f64, range: f64 },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
