use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid MetaImage header: {0}")]
    Header(String),

    #[error("unsupported element type `{0}`")]
    UnsupportedElementType(String),

    #[error("raw payload holds {found} bytes, header implies {expected}")]
    PayloadSize { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("fields do not share a grid geometry")]
    GeometryMismatch,

    #[error("mask selects no voxels")]
    EmptyMask,

    #[error("embedding has no zero crossing")]
    NoZeroCrossing,

    #[error("phase `{0}` has zero integrated indicator")]
    EmptyPhase(&'static str),

    #[error("surface area is zero; surface averages are undefined")]
    EmptySurface,

    #[error("sweeping has no seed voxel")]
    NoSeed,

    #[error("sweeping did not converge within {cycles} cycles")]
    SweepNotConverged { cycles: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the data rather than by usage or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoZeroCrossing
                | Error::EmptyPhase(_)
                | Error::EmptySurface
                | Error::NoSeed
                | Error::SweepNotConverged { .. }
        )
    }
}
