use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{BBox, Embedding};

/// Index of a detection within its frame's input list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetId(pub usize);

/// Identity of a track, unique over a tracker's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// 1-based frame index.
    pub frame: u32,
    pub bbox: BBox,
    pub conf: f64,
    pub embedding: Option<Embedding>,
    /// 1-based line of the record in its source file, 0 when synthesized.
    pub source_line: usize,
}

impl Detection {
    pub fn new(frame: u32, bbox: BBox, conf: f64) -> Self {
        Self {
            frame,
            bbox,
            conf,
            embedding: None,
            source_line: 0,
        }
    }

    pub fn with_embedding(mut self, embedding: Embedding) -> Self {
        self.embedding = Some(embedding);
        self
    }
}

/// One frame's detections split into the reliable pool, the unreliable pool
/// and the suppressed remainder. Members are indices into the frame's input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FramePartition {
    pub first: Vec<DetId>,
    pub second: Vec<DetId>,
    pub discarded: Vec<DetId>,
}

/// Conflict-free set of (detection, track) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentSet {
    by_det: BTreeMap<DetId, TrackId>,
    by_track: BTreeMap<TrackId, DetId>,
}

impl AssignmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (DetId, TrackId)>) -> Result<Self> {
        let mut set = Self::new();
        for (d, t) in pairs {
            set.insert(d, t)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, det: DetId, track: TrackId) -> Result<()> {
        if self.by_det.contains_key(&det) {
            return Err(Error::DetectionConflict { det });
        }
        if self.by_track.contains_key(&track) {
            return Err(Error::TrackConflict { track });
        }
        self.by_det.insert(det, track);
        self.by_track.insert(track, det);
        Ok(())
    }

    pub fn remove_det(&mut self, det: DetId) -> Option<TrackId> {
        let track = self.by_det.remove(&det)?;
        self.by_track.remove(&track);
        Some(track)
    }

    pub fn track_of(&self, det: DetId) -> Option<TrackId> {
        self.by_det.get(&det).copied()
    }

    pub fn det_of(&self, track: TrackId) -> Option<DetId> {
        self.by_track.get(&track).copied()
    }

    pub fn contains(&self, det: DetId, track: TrackId) -> bool {
        self.track_of(det) == Some(track)
    }

    pub fn len(&self) -> usize {
        self.by_det.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_det.is_empty()
    }

    /// Pairs in ascending detection order.
    pub fn iter(&self) -> impl Iterator<Item = (DetId, TrackId)> + '_ {
        self.by_det.iter().map(|(d, t)| (*d, *t))
    }

    pub fn pairs(&self) -> Vec<(DetId, TrackId)> {
        self.iter().collect()
    }

    pub fn is_superset_of(&self, other: &AssignmentSet) -> bool {
        other.iter().all(|(d, t)| self.contains(d, t))
    }
}
