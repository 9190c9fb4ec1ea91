use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("unknown food `{token}` in category name `{name}`")]
    UnknownFood { token: String, name: String },

    #[error("unknown condition `{token}` in category name `{name}`")]
    UnknownCondition { token: String, name: String },

    #[error("category name `{0}` does not follow the `<food>__<condition>` convention")]
    MalformedCategoryName(String),

    /// A structurally valid file whose records do not cross-reference.
    #[error("{record}: field `{field}`: {message}")]
    Load {
        record: String,
        field: &'static str,
        message: String,
    },

    #[error("malformed JSON in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("raster format error at byte {offset}: {message}")]
    RasterFormat { offset: usize, message: String },

    #[error("unsupported PPM variant: {0} (only binary P6 with maxval 255 is supported)")]
    UnsupportedVariant(String),

    #[error("missing raster for image {0}")]
    MissingRaster(u64),

    #[error("no region feature for `{0}`")]
    MissingFeature(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by unreadable, missing, or corrupted input
    /// files, as opposed to bad arguments or invariant violations.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Load { .. }
                | Error::Json { .. }
                | Error::Io { .. }
                | Error::RasterFormat { .. }
                | Error::UnsupportedVariant(_)
                | Error::MissingRaster(_)
                | Error::MissingFeature(_)
        )
    }
}
