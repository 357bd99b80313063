use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid range: lo ({lo}) must be strictly less than hi ({hi})")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("activation {0} has no standalone derivative; softmax is differentiated jointly with categorical cross-entropy in backward")]
    UnsupportedActivation(&'static str),

    #[error("non-finite value encountered in {0}")]
    Numeric(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: cannot read {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("format error at row {row}: {message}")]
    Format { row: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("unknown {kind} {given:?}; valid ids: {valid}")]
    UnknownId {
        kind: &'static str,
        given: String,
        valid: String,
    },

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("incompatible model format version {found} (this build reads version {supported})")]
    IncompatibleVersion { found: u32, supported: u32 },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn shape(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
