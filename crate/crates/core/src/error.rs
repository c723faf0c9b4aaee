use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("wrong sample count: expected {expected}, found {found}")]
    WrongSampleCount { expected: usize, found: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("function has zero global oscillation")]
    ZeroGlobalOscillation,

    #[error("cell ({level}, {index}) has zero oscillation")]
    ZeroOscillationCell { level: u32, index: usize },

    #[error("base mismatch: {left} vs {right}")]
    BaseMismatch { left: u32, right: u32 },

    #[error("level {level} exceeds depth {depth}")]
    LevelOutOfRange { level: u32, depth: u32 },

    #[error("schedule level {level} exceeds depth {depth}")]
    ScheduleExceedsDepth { level: u32, depth: u32 },

    #[error("value {value} outside [0, 1]")]
    OutOfDomain { value: f64 },

    #[error("parameter {value} outside {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("row cannot be bracketed: every entry is >= 1 or the sum never crosses 1")]
    NotBracketable,

    #[error("row has a non-positive entry or fewer than two entries")]
    DegenerateRow,

    #[error("stage {level}: cell {index} is shorter than the breakpoint resolution at its position")]
    Unresolvable { level: u32, index: usize },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("similitude system is not contractive: max |lambda| = {max_lambda}")]
    NonContractive { max_lambda: f64 },

    #[error("similitude system yields a discontinuous solution at branch boundary {boundary}")]
    Discontinuous { boundary: usize },

    #[error("evaluation grid misses the support [{lo}, {hi}]")]
    EmptySupport { lo: f64, hi: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 validation, 3 computation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::WrongSampleCount { .. }
            | Error::NonFinite { .. }
            | Error::ZeroGlobalOscillation
            | Error::BaseMismatch { .. }
            | Error::LevelOutOfRange { .. }
            | Error::ScheduleExceedsDepth { .. }
            | Error::OutOfDomain { .. }
            | Error::OutOfRange { .. }
            | Error::NonContractive { .. }
            | Error::Discontinuous { .. } => 2,
            Error::ZeroOscillationCell { .. }
            | Error::NotBracketable
            | Error::DegenerateRow
            | Error::NoRoot(_)
            | Error::Unresolvable { .. }
            | Error::EmptySupport { .. }
            | Error::NotApplicable(_) => 3,
            Error::Malformed(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 4,
        }
    }
}
