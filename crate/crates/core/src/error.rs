use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("duplicate video id '{0}'")]
    DuplicateVideo(String),

    #[error("video '{video_id}': relation instance {index} references unknown tid {tid}")]
    UnknownTid {
        video_id: String,
        index: usize,
        tid: i64,
    },

    #[error("video '{video_id}': tid {tid} has no box at frame {fid} (needed for [{begin}, {end}))")]
    MissingFrameBox {
        video_id: String,
        tid: i64,
        fid: i64,
        begin: i64,
        end: i64,
    },

    #[error("video '{video_id}': prediction {index}: {message}")]
    BadPrediction {
        video_id: String,
        index: usize,
        message: String,
    },

    #[error("video '{video_id}': fps missing from annotation and no default supplied")]
    MissingFps { video_id: String },

    #[error("unknown builtin taxonomy '{0}' (expected 'vidor' or 'vidvrd')")]
    UnknownBuiltin(String),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("no video has ground truth; mAP is undefined")]
    NoScorableVideo,

    #[error("infeasible injection spec: {0}")]
    InfeasibleInjection(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
