use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: file has no header or no data rows")]
    EmptyFile { path: PathBuf },
    #[error("{path}:{line}: expected {expected} columns, found {found}")]
    MalformedRow { path: PathBuf, line: u64, expected: usize, found: usize },
    #[error("{path}:{line}: column `{column}` holds non-numeric value `{value}`")]
    NonNumericCell { path: PathBuf, line: u64, column: String, value: String },
    #[error("{path}: required label column `{column}` is missing from the header")]
    MissingLabelColumn { path: PathBuf, column: String },
    #[error("{path}: no access-point columns match prefixes {prefixes:?}")]
    NoApColumns { path: PathBuf, prefixes: Vec<String> },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("output directory {0} is locked by another run (remove the lock file if stale)")]
    LockHeld(PathBuf),
    #[error("train and test maps disagree on access points: {0}")]
    ApMismatch(String),
    #[error(transparent)]
    Core(#[from] cleandb_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status for this error. Each kind has its own code; 1 and
    /// 2 are left to panics and argument parsing.
    pub fn exit_code(&self) -> i32 {
        use cleandb_core::Error as C;
        match self {
            Error::Io { .. } => 3,
            Error::EmptyFile { .. } => 4,
            Error::MalformedRow { .. } => 5,
            Error::NonNumericCell { .. } => 6,
            Error::MissingLabelColumn { .. } => 7,
            Error::NoApColumns { .. } => 8,
            Error::Csv { .. } => 9,
            Error::Config(_) => 10,
            Error::Json { .. } => 11,
            Error::LockHeld(_) => 12,
            Error::ApMismatch(_) => 13,
            Error::Core(c) => match c {
                C::EmptyMap => 20,
                C::DuplicateApId(_) => 21,
                C::RaggedRow { .. } => 22,
                C::RssOutOfBand { .. } => 23,
                C::NoDetectedValues => 24,
                C::ZeroWindow => 30,
                C::AllRemoved { .. } => 31,
                C::InvalidConfig(_) => 32,
                C::EmptyTrainingSet => 40,
                C::KTooLarge { .. } => 41,
                C::DimensionMismatch { .. } => 42,
                C::MissingGroundTruth(_) => 50,
                C::ZeroBaselineField(_) => 51,
                C::EmptyInput => 52,
            },
        }
    }
}
