use std::collections::BTreeMap;

use super::DdaContext;
use crate::assignment::{build_cost, solve_pinned};
use crate::error::Result;
use crate::types::{AssignmentSet, DetId, TrackId};

/// An unreliable detection that displaced a matched reliable one.
#[derive(Debug, Clone, PartialEq)]
pub struct Replacement {
    pub track: TrackId,
    pub replaced: DetId,
    pub promoted: DetId,
    pub old_sim: f64,
    pub new_sim: f64,
}

#[derive(Debug, Clone)]
pub struct DdmOutcome {
    pub assignment: AssignmentSet,
    pub promoted: Vec<DetId>,
    pub replacements: Vec<Replacement>,
    /// Reliable pool with the promoted detections appended.
    pub first: Vec<DetId>,
    pub second: Vec<DetId>,
}

/// Detection disambiguation. Uses positions only: unreliable detections carry
/// untrustworthy appearance.
pub fn ddm(ctx: &DdaContext<'_>) -> Result<DdmOutcome> {
    // Best unreliable candidate per matched track, keyed by candidate so that
    // competing tracks can be resolved afterwards.
    let mut by_candidate: BTreeMap<DetId, Replacement> = BTreeMap::new();
    for (dj, tj) in ctx.assignment.iter() {
        let old_sim = ctx.loc_sim(dj, tj);
        let best = ctx
            .second
            .iter()
            .map(|&di| (di, ctx.loc_sim(di, tj)))
            .filter(|&(_, s)| s - old_sim > ctx.kappa && s >= ctx.gate)
            .fold(None::<(DetId, f64)>, |acc, (di, s)| match acc {
                Some((_, best)) if best >= s => acc,
                _ => Some((di, s)),
            });
        let Some((di, new_sim)) = best else { continue };
        let candidate = Replacement {
            track: tj,
            replaced: dj,
            promoted: di,
            old_sim,
            new_sim,
        };
        // Conflicts on one unreliable detection keep the higher LocSim; ties
        // keep the earlier (lower-id) claim.
        match by_candidate.get(&di) {
            Some(current) if current.new_sim >= new_sim => {}
            _ => {
                by_candidate.insert(di, candidate);
            }
        }
    }

    if by_candidate.is_empty() {
        return Ok(DdmOutcome {
            assignment: ctx.assignment.clone(),
            promoted: Vec::new(),
            replacements: Vec::new(),
            first: ctx.first.clone(),
            second: ctx.second.clone(),
        });
    }

    let replacements: Vec<Replacement> = by_candidate.into_values().collect();
    let promoted: Vec<DetId> = replacements.iter().map(|r| r.promoted).collect();
    let mut first = ctx.first.clone();
    first.extend(promoted.iter().copied());
    let second: Vec<DetId> = ctx
        .second
        .iter()
        .copied()
        .filter(|d| !promoted.contains(d))
        .collect();

    // Re-solve every track against the enlarged reliable pool with the
    // replacements pinned.
    let rows: Vec<_> = first.iter().map(|&d| ctx.det(d)).collect();
    let predicted: Vec<_> = ctx.tracks.iter().map(|t| t.predicted).collect();
    let cost = build_cost(&rows, &predicted, ctx.gate);
    let row_of = |d: DetId| {
        first
            .iter()
            .position(|&x| x == d)
            .expect("promoted is in first")
    };
    let col_of = |t: TrackId| {
        ctx.tracks
            .iter()
            .position(|x| x.id == t)
            .expect("assigned track is in context")
    };
    let pins: Vec<(usize, usize)> = replacements
        .iter()
        .map(|r| (row_of(r.promoted), col_of(r.track)))
        .collect();
    let solved = solve_pinned(&cost, &pins)?;
    let assignment = AssignmentSet::from_pairs(
        solved
            .into_iter()
            .map(|(r, c)| (first[r], ctx.tracks[c].id)),
    )?;

    Ok(DdmOutcome {
        assignment,
        promoted,
        replacements,
        first,
        second,
    })
}
