use std::collections::BTreeMap;

use super::DdaContext;
use crate::assignment::{solve, CostMatrix};
use crate::error::Result;
use crate::types::{AssignmentSet, DetId, TrackId};

/// Applied swaps must beat the current appearance cost by more than this.
const MIN_GAIN: f64 = 1e-12;

/// Population standard deviation over mean; `None` when the mean is zero.
pub fn coefficient_of_variation(values: &[f64; 4]) -> Option<f64> {
    let mean = values.iter().sum::<f64>() / 4.0;
    if mean == 0.0 {
        return None;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
    Some(var.sqrt() / mean)
}

/// Positional confusion between two assignments `a` and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConfusion {
    pub a: (DetId, TrackId),
    pub b: (DetId, TrackId),
    /// LocSim of (d_a,t_a), (d_a,t_b), (d_b,t_a), (d_b,t_b).
    pub loc_sims: [f64; 4],
    pub cv: Option<f64>,
    pub confused: bool,
    /// Straight and crossed appearance cost sums.
    pub straight: f64,
    pub crossed: f64,
}

impl PairConfusion {
    /// Confused and the crossed pairing is strictly cheaper in appearance.
    pub fn proposes_swap(&self) -> bool {
        self.confused && self.crossed < self.straight
    }
}

/// Appearance re-matching of one connected group of confused assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentResolution {
    pub before: Vec<(DetId, TrackId)>,
    pub after: Vec<(DetId, TrackId)>,
    pub cost_before: f64,
    pub cost_after: f64,
    pub applied: bool,
}

#[derive(Debug, Clone)]
pub struct AdmOutcome {
    pub assignment: AssignmentSet,
    pub pairs: Vec<PairConfusion>,
    pub components: Vec<ComponentResolution>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Association disambiguation. Pairs of assignments whose 2x2 LocSim block
/// has a coefficient of variation below kappa are grouped into connected
/// components; each component is re-matched on appearance alone and the
/// result kept only if it lowers the component's total cosine distance.
pub fn adm(ctx: &DdaContext<'_>, p_in: &AssignmentSet) -> Result<AdmOutcome> {
    let eligible: Vec<(DetId, TrackId)> = p_in
        .iter()
        .filter(|&(d, t)| ctx.appearance(d, t).is_some())
        .collect();
    let n = eligible.len();

    let mut pairs = Vec::new();
    let mut linked = vec![vec![false; n]; n];
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let (da, ta) = eligible[i];
            let (db, tb) = eligible[j];
            let loc_sims = [
                ctx.loc_sim(da, ta),
                ctx.loc_sim(da, tb),
                ctx.loc_sim(db, ta),
                ctx.loc_sim(db, tb),
            ];
            let cv = coefficient_of_variation(&loc_sims);
            let confused = cv.is_some_and(|cv| cv < ctx.kappa);
            let dist = |d, t| ctx.appearance(d, t).unwrap_or(f64::INFINITY);
            let straight = dist(da, ta) + dist(db, tb);
            let crossed = dist(da, tb) + dist(db, ta);
            if confused {
                linked[i][j] = true;
                linked[j][i] = true;
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
            pairs.push(PairConfusion {
                a: eligible[i],
                b: eligible[j],
                loc_sims,
                cv,
                confused,
                straight,
                crossed,
            });
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    let mut assignment = p_in.clone();
    let mut components = Vec::new();
    for members in groups.into_values().filter(|m| m.len() > 1) {
        let k = members.len();
        // Rows are the members' detections, columns their tracks. Only
        // directly confused assignments may exchange tracks.
        let cost = CostMatrix::from_fn(k, k, |r, c| {
            let (i, j) = (members[r], members[c]);
            if i != j && !linked[i][j] {
                return None;
            }
            ctx.appearance(eligible[i].0, eligible[j].1)
                .map(|d| (d / 2.0).clamp(0.0, 1.0))
        })?;
        let before: Vec<(DetId, TrackId)> = members.iter().map(|&i| eligible[i]).collect();
        let cost_before: f64 = (0..k).filter_map(|r| cost.get(r, r)).sum::<f64>() * 2.0;
        let matched = solve(&cost);
        let after: Vec<(DetId, TrackId)> = matched
            .iter()
            .map(|&(r, c)| (eligible[members[r]].0, eligible[members[c]].1))
            .collect();
        let cost_after = cost.total(&matched) * 2.0;
        let applied = matched.len() == k && cost_after < cost_before - MIN_GAIN;
        if applied {
            for &(d, _) in &before {
                assignment.remove_det(d);
            }
            for &(d, t) in &after {
                assignment.insert(d, t)?;
            }
        }
        components.push(ComponentResolution {
            before,
            after: if applied { after } else { Vec::new() },
            cost_before,
            cost_after,
            applied,
        });
    }

    Ok(AdmOutcome {
        assignment,
        pairs,
        components,
    })
}
