//! Tracking-by-detection multi-object tracking with decomposed data
//! association and occlusion-aware NMS.
//!
//! The per-frame pipeline lives in [`tracker`]: detections are split by
//! [`onms`], matched against Kalman-predicted tracks with [`assignment`],
//! refined by the three disambiguation passes in [`dda`], and then fed to a
//! second motion-only association over the unreliable detections.
//! [`io`], [`metrics`] and [`synth`] cover file formats, CLEAR/IDF1
//! evaluation and deterministic synthetic test scenes.

pub mod assignment;
pub mod config;
pub mod dda;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod onms;
pub mod synth;
pub mod tracker;
pub mod types;

pub use config::TrackerConfig;
pub use error::{Error, Result};
pub use geometry::{center_to_tlwh, cos_dist, iou, loc_sim, tlwh_to_center, BBox, Embedding};
pub use tracker::{Components, FrameResult, Tracker};
pub use types::{AssignmentSet, DetId, Detection, FramePartition, TrackId};
