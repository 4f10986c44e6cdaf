use std::collections::BTreeMap;

use super::DdaContext;
use crate::error::Result;
use crate::types::{AssignmentSet, DetId, TrackId};

/// Appearance decision made for one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmDecision {
    pub det: DetId,
    pub original: TrackId,
    /// Candidate tracks including `original`, ascending by id.
    pub blur: Vec<TrackId>,
    /// Appearance argmin over `blur`, before conflicts are resolved.
    pub chosen: TrackId,
    pub chosen_dist: f64,
    /// Track the detection ends up with; `None` when it lost a conflict and
    /// its original track was taken.
    pub assigned: Option<TrackId>,
}

#[derive(Debug, Clone)]
pub struct TdmOutcome {
    pub assignment: AssignmentSet,
    /// One entry per assignment that had appearance on both sides.
    pub decisions: Vec<TdmDecision>,
}

/// Trajectory disambiguation: each matched detection may move to an
/// unmatched track that trails its current LocSim by less than kappa and is
/// closer in appearance.
pub fn tdm(ctx: &DdaContext<'_>, p_in: &AssignmentSet) -> Result<TdmOutcome> {
    let unmatched: Vec<TrackId> = ctx
        .tracks
        .iter()
        .map(|t| t.id)
        .filter(|&t| p_in.det_of(t).is_none())
        .collect();

    let mut decisions = Vec::new();
    let mut passthrough = Vec::new();
    for (dj, tj) in p_in.iter() {
        let Some(own_dist) = ctx.appearance(dj, tj) else {
            passthrough.push((dj, tj));
            continue;
        };
        let own_sim = ctx.loc_sim(dj, tj);
        let mut blur: Vec<(TrackId, f64)> = vec![(tj, own_dist)];
        for &ti in &unmatched {
            if own_sim - ctx.loc_sim(dj, ti) < ctx.kappa {
                if let Some(dist) = ctx.appearance(dj, ti) {
                    blur.push((ti, dist));
                }
            }
        }
        blur.sort_by_key(|(t, _)| *t);
        // Strictly closer wins; on ties the original track is kept.
        let (chosen, chosen_dist) =
            blur.iter().copied().fold(
                (tj, own_dist),
                |best, cand| if cand.1 < best.1 { cand } else { best },
            );
        decisions.push(TdmDecision {
            det: dj,
            original: tj,
            blur: blur.iter().map(|(t, _)| *t).collect(),
            chosen,
            chosen_dist,
            assigned: None,
        });
    }

    // A track claimed by several detections goes to the smallest distance,
    // then the lowest detection id.
    let mut winner: BTreeMap<TrackId, usize> = BTreeMap::new();
    for (i, d) in decisions.iter().enumerate() {
        match winner.get(&d.chosen) {
            Some(&w) if decisions[w].chosen_dist <= d.chosen_dist => {}
            _ => {
                winner.insert(d.chosen, i);
            }
        }
    }

    let mut assignment = AssignmentSet::new();
    for &(d, t) in &passthrough {
        assignment.insert(d, t)?;
    }
    for (&t, &i) in &winner {
        assignment.insert(decisions[i].det, t)?;
        decisions[i].assigned = Some(t);
    }
    for d in decisions.iter_mut().filter(|d| d.assigned.is_none()) {
        // Losers fall back to their original track unless a winner took it.
        if assignment.det_of(d.original).is_none() {
            assignment.insert(d.det, d.original)?;
            d.assigned = Some(d.original);
        }
    }
    Ok(TdmOutcome {
        assignment,
        decisions,
    })
}
