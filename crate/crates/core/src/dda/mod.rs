//! Decomposed data association: three refinements applied to the first
//! association of a frame.
//!
//! * [`ddm`] swaps a matched reliable detection for a clearly better placed
//!   unreliable one and re-solves the remaining assignment around it.
//! * [`tdm`] lets a detection move to an unmatched track that is nearly as
//!   well placed but closer in appearance.
//! * [`adm`] exchanges the tracks of two assignments whose positional cues are
//!   nearly indistinguishable when appearance prefers the crossed pairing.
//!
//! [`run_dda`] applies them in that order with a single confusion factor.

mod adm;
mod ddm;
mod tdm;

pub use adm::{adm, coefficient_of_variation, AdmOutcome, ComponentResolution, PairConfusion};
pub use ddm::{ddm, DdmOutcome, Replacement};
pub use tdm::{tdm, TdmDecision, TdmOutcome};

use crate::error::Result;
use crate::geometry::{cos_dist, iou, BBox, Embedding};
use crate::types::{AssignmentSet, DetId, Detection, TrackId};

/// What the association stages need to know about a track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackView {
    pub id: TrackId,
    /// Kalman prediction for the current frame.
    pub predicted: BBox,
    pub feature: Option<Embedding>,
}

#[derive(Debug, Clone)]
pub struct DdaContext<'a> {
    /// All detections of the frame, indexed by [`DetId`].
    pub detections: &'a [Detection],
    /// Initial assignment over reliable detections.
    pub assignment: AssignmentSet,
    pub first: Vec<DetId>,
    pub second: Vec<DetId>,
    pub tracks: Vec<TrackView>,
    pub kappa: f64,
    /// Minimum LocSim accepted when re-solving the first association.
    pub gate: f64,
}

impl DdaContext<'_> {
    pub fn det(&self, d: DetId) -> &Detection {
        &self.detections[d.0]
    }

    pub fn track(&self, id: TrackId) -> Option<&TrackView> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// LocSim between a detection and a track's predicted box; 0 for unknown
    /// tracks.
    pub fn loc_sim(&self, d: DetId, t: TrackId) -> f64 {
        self.track(t)
            .map_or(0.0, |t| iou(&self.det(d).bbox, &t.predicted))
    }

    /// Cosine distance between a detection's embedding and a track's feature,
    /// when both exist.
    pub fn appearance(&self, d: DetId, t: TrackId) -> Option<f64> {
        let f = self.det(d).embedding.as_ref()?;
        let g = self.track(t)?.feature.as_ref()?;
        cos_dist(f, g).ok()
    }
}

/// Which refinements [`run_dda`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DdaToggles {
    pub ddm: bool,
    pub tdm: bool,
    pub adm: bool,
}

impl Default for DdaToggles {
    fn default() -> Self {
        Self {
            ddm: true,
            tdm: true,
            adm: true,
        }
    }
}

impl DdaToggles {
    pub fn none() -> Self {
        Self {
            ddm: false,
            tdm: false,
            adm: false,
        }
    }

    pub fn any(&self) -> bool {
        self.ddm || self.tdm || self.adm
    }
}

#[derive(Debug, Clone)]
pub struct DdaResult {
    pub assignment: AssignmentSet,
    pub first: Vec<DetId>,
    pub second: Vec<DetId>,
    pub ddm: Option<DdmOutcome>,
    pub tdm: Option<TdmOutcome>,
    pub adm: Option<AdmOutcome>,
}

/// DDM, then TDM, then ADM, each fed the previous assignment.
pub fn run_dda(ctx: &DdaContext<'_>, toggles: DdaToggles) -> Result<DdaResult> {
    let mut ctx = ctx.clone();
    let ddm_out = if toggles.ddm {
        let out = ddm(&ctx)?;
        ctx.assignment = out.assignment.clone();
        ctx.first = out.first.clone();
        ctx.second = out.second.clone();
        Some(out)
    } else {
        None
    };
    let tdm_out = if toggles.tdm {
        let out = tdm(&ctx, &ctx.assignment)?;
        ctx.assignment = out.assignment.clone();
        Some(out)
    } else {
        None
    };
    let adm_out = if toggles.adm {
        let out = adm(&ctx, &ctx.assignment)?;
        ctx.assignment = out.assignment.clone();
        Some(out)
    } else {
        None
    };
    Ok(DdaResult {
        assignment: ctx.assignment,
        first: ctx.first,
        second: ctx.second,
        ddm: ddm_out,
        tdm: tdm_out,
        adm: adm_out,
    })
}
