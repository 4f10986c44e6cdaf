use std::path::PathBuf;

use crate::types::{DetId, TrackId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("detection {det:?} is already assigned")]
    DetectionConflict { det: DetId },

    #[error("track {track:?} is already assigned")]
    TrackConflict { track: TrackId },

    #[error("invalid pin ({row}, {col}): {reason}")]
    InvalidPin {
        row: usize,
        col: usize,
        reason: &'static str,
    },

    #[error("non-finite Kalman measurement")]
    NonFiniteMeasurement,

    #[error("frame {got} is not after previous frame {previous}")]
    FrameOrder { previous: u32, got: u32 },

    #[error("detection from frame {got} passed to step for frame {expected}")]
    WrongFrame { expected: u32, got: u32 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error("{0}")]
    FrameRange(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
