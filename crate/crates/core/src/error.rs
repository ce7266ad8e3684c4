use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("radio map must contain at least one fingerprint and one access point")]
    EmptyMap,
    #[error("duplicate access point identifier `{0}`")]
    DuplicateApId(String),
    #[error("fingerprint {row} has {found} RSS values, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("RSS value {value} at row {row}, column {col} is outside the plausible band [{min}, {max}]")]
    RssOutOfBand { row: usize, col: usize, value: f64, min: f64, max: f64 },
    #[error("radio map has no detected RSS values")]
    NoDetectedValues,
    #[error("rank window is zero: no fingerprint has a detected access point")]
    ZeroWindow,
    #[error("every fingerprint scored a zero match percentage at rho = {rho}")]
    AllRemoved { rho: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k = {k} exceeds the training-set size {train}")]
    KTooLarge { k: usize, train: usize },
    #[error("query has {found} values, positioner expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ground truth for `{0}` is missing in the evaluation set")]
    MissingGroundTruth(&'static str),
    #[error("baseline field `{0}` is zero and cannot normalize")]
    ZeroBaselineField(&'static str),
    #[error("input is empty")]
    EmptyInput,
}
