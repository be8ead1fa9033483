use std::path::PathBuf;

/// Errors raised by the detection toolkit.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The file could be read but not decoded as a PNG or BMP raster.
    #[error("unsupported or corrupt image: {0}")]
    Format(String),

    #[error("invalid block size {size}: {reason}")]
    InvalidBlockSize { size: usize, reason: &'static str },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A forgery recipe that does not fit the image or overlaps itself.
    #[error("invalid forgery spec: {0}")]
    InvalidSpec(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
