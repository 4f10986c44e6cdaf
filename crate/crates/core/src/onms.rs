//! Occlusion-aware NMS: splits one frame's raw detections into reliable,
//! unreliable and discarded sets using two confidence and two overlap
//! thresholds.

use crate::config::TrackerConfig;
use crate::geometry::iou;
use crate::types::{DetId, Detection, FramePartition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuppressionScore {
    pub det: DetId,
    /// Largest IoU against any detection ranked above this one.
    pub u: f64,
}

/// Thresholds used by [`partition_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmsThresholds {
    pub conf_first: f64,
    pub conf_second: f64,
    pub nms_first: f64,
    pub nms_second: f64,
}

impl NmsThresholds {
    pub fn from_config(cfg: &TrackerConfig) -> Self {
        Self {
            conf_first: cfg.conf_first,
            conf_second: cfg.conf_second,
            nms_first: cfg.nms_first,
            nms_second: cfg.nms_second,
        }
    }

    /// Conventional single-threshold NMS: the occlusion branch is closed.
    pub fn single(cfg: &TrackerConfig) -> Self {
        Self {
            nms_second: cfg.nms_first,
            ..Self::from_config(cfg)
        }
    }
}

/// True when detection `j` ranks strictly above detection `i`: higher
/// confidence, or equal confidence and earlier in the input.
fn outranks(dets: &[Detection], j: usize, i: usize) -> bool {
    dets[j].conf > dets[i].conf || (dets[j].conf == dets[i].conf && j < i)
}

/// One-shot suppression scores: each detection is compared against every
/// higher-ranked raw detection, suppressed or not.
pub fn suppression_scores(dets: &[Detection]) -> Vec<SuppressionScore> {
    (0..dets.len())
        .map(|i| {
            let u = (0..dets.len())
                .filter(|&j| j != i && outranks(dets, j, i))
                .map(|j| iou(&dets[i].bbox, &dets[j].bbox))
                .fold(0.0, f64::max);
            SuppressionScore { det: DetId(i), u }
        })
        .collect()
}

pub fn partition(dets: &[Detection], cfg: &TrackerConfig) -> FramePartition {
    partition_with(dets, &NmsThresholds::from_config(cfg))
}

pub fn partition_with(dets: &[Detection], t: &NmsThresholds) -> FramePartition {
    let mut out = FramePartition::default();
    for s in suppression_scores(dets) {
        let c = dets[s.det.0].conf;
        let kept = s.u <= t.nms_first;
        if c >= t.conf_first && kept {
            out.first.push(s.det);
        } else if (c < t.conf_first && c >= t.conf_second && kept)
            || (c >= t.conf_first && s.u > t.nms_first && s.u <= t.nms_second)
        {
            out.second.push(s.det);
        } else {
            out.discarded.push(s.det);
        }
    }
    out
}
