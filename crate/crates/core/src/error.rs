use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The adder-library document is not valid JSON or not a list of entries.
    #[error("malformed adder library: {0}")]
    Parse(String),

    #[error("adder '{entry}': field '{field}' {reason}")]
    Format {
        entry: String,
        field: String,
        reason: String,
    },

    #[error("duplicate adder name '{0}'")]
    DuplicateAdder(String),

    #[error("unknown adder type '{0}'")]
    UnknownAdder(String),

    #[error("library is missing adders: {}", .0.join(", "))]
    MissingAdders(Vec<String>),

    #[error("invalid multiplier configuration: {0}")]
    InvalidConfig(String),

    #[error("operand {value} does not fit in {width} bits")]
    OperandOutOfRange { value: u64, width: u32 },

    #[error("cannot finalize an empty accumulator")]
    EmptySweep,

    #[error("invalid metric input: {0}")]
    InvalidMetric(String),

    #[error("cluster size {size} does not evenly divide the {width}-bit operand range")]
    InvalidClusterSpec { size: u64, width: u32 },

    #[error("cluster reports disagree: {0}")]
    MismatchedClusterSpecs(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed user-supplied documents.
    pub fn is_input_format(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Format { .. } | Error::DuplicateAdder(_)
        )
    }
}
