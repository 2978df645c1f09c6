//! Error type shared across the crate.
//!
//! Every failure is assigned to one of six broad classes so the CLI can map
//! it to a stable process exit code. Variants carry enough context (row and
//! column numbers, offending k, centroid pairs) to be actionable without a
//! debugger.

use std::path::PathBuf;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed configuration: unknown keys, unparsable values, inconsistent
    /// flag combinations.
    Config,
    /// Malformed or unusable data: bad CSV cells, ragged rows, invalid
    /// mixture specifications, label problems.
    Data,
    /// Clustering could not run or produce a usable model.
    Clustering,
    /// A validity index is undefined on the given clustering.
    Index,
    /// Posterior computation failed (bad prior, overflow, range mismatch).
    Bayes,
    /// Operating-system level I/O failure.
    Io,
}

impl ErrorClass {
    /// Process exit code for this class. Zero is reserved for success.
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Clustering => 4,
            ErrorClass::Index => 5,
            ErrorClass::Bayes => 6,
            ErrorClass::Io => 7,
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // --- configuration ---
    #[error("invalid configuration: {0}")]
    Config(String),

    // --- data ---
    #[error("{path}: file is empty")]
    EmptyFile { path: PathBuf },
    #[error("{path}: row {row}, column {col}: cannot parse {cell:?} as a number")]
    NonNumericCell {
        path: PathBuf,
        /// 1-based line number in the file (a header line counts).
        row: usize,
        /// 1-based column number.
        col: usize,
        cell: String,
    },
    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: label column {name:?} not found (a header row is required to name columns)")]
    MissingLabelColumn { path: PathBuf, name: String },
    #[error("{path}: row {row}: label {value} is not an integer")]
    NonIntegerLabel { path: PathBuf, row: usize, value: f64 },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid mixture specification: {0}")]
    InvalidMixture(String),
    #[error("length mismatch: {left} labels vs {right} assignments")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid report: {0}")]
    InvalidReport(String),

    // --- clustering ---
    #[error("cannot fit {k} clusters to {n} points")]
    KOutOfRange { k: usize, n: usize },
    #[error("fuzziness must be > 1, got {m}")]
    FuzzinessOutOfRange { m: f64 },
    #[error("cannot keep {k} clusters non-empty: the data have too few distinct points")]
    EmptyClusterUnrepairable { k: usize },
    #[error("clustering accuracy {accuracy:.4} is below the required threshold {threshold}")]
    AccuracyBelowThreshold { accuracy: f64, threshold: f64 },

    // --- validity indices ---
    #[error("coincident centroids {i} and {j} at k = {k}: index undefined")]
    CoincidentCentroids { k: usize, i: usize, j: usize },
    #[error("index undefined: {0}")]
    IndexUndefined(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("too few points for pair correlation: need at least {min}, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    // --- posterior ---
    #[error("prior covers k = {prior_lo}..={prior_hi} but the series covers k = {series_lo}..={series_hi}")]
    PriorRangeMismatch {
        prior_lo: usize,
        prior_hi: usize,
        series_lo: usize,
        series_hi: usize,
    },
    #[error("prior parameters must be positive and finite: {0}")]
    InvalidPrior(String),
    #[error("series value at k = {k} is not finite")]
    NonFiniteSeries { k: usize },
    #[error("moment computation overflowed")]
    MomentOverflow,

    // --- I/O ---
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Wraps an error with the k at which the pipeline hit it.
    #[error("at k = {k}: {source}")]
    AtK {
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// I/O error tagged with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Wrap `self` with the k at which the pipeline encountered it.
    pub fn at_k(self, k: usize) -> Self {
        Error::AtK { k, source: Box::new(self) }
    }

    /// The broad class this error belongs to.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::EmptyFile { .. }
            | Error::NonNumericCell { .. }
            | Error::RaggedRow { .. }
            | Error::MissingLabelColumn { .. }
            | Error::NonIntegerLabel { .. }
            | Error::InvalidDataset(_)
            | Error::InvalidMixture(_)
            | Error::LengthMismatch { .. }
            | Error::InvalidReport(_) => ErrorClass::Data,
            Error::KOutOfRange { .. }
            | Error::FuzzinessOutOfRange { .. }
            | Error::EmptyClusterUnrepairable { .. }
            | Error::AccuracyBelowThreshold { .. } => ErrorClass::Clustering,
            Error::CoincidentCentroids { .. }
            | Error::IndexUndefined(_)
            | Error::InvalidSeries(_)
            | Error::TooFewPoints { .. }
            | Error::DimensionMismatch { .. } => ErrorClass::Index,
            Error::PriorRangeMismatch { .. }
            | Error::InvalidPrior(_)
            | Error::NonFiniteSeries { .. }
            | Error::MomentOverflow => ErrorClass::Bayes,
            Error::Io { .. } => ErrorClass::Io,
            Error::AtK { source, .. } => source.class(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
