//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deconfuse_core::assignment::CostMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random matrix with costs on the 1/256 grid, so sums are exact, and
/// roughly `forbidden_rate` of the cells gated out.
pub fn dyadic_matrix(
    r: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    forbidden_rate: f64,
) -> CostMatrix {
    let cells: Vec<Option<f64>> = (0..rows * cols)
        .map(|_| {
            if r.random::<f64>() < forbidden_rate {
                None
            } else {
                Some(f64::from(r.random_range(0..=256u32)) / 256.0)
            }
        })
        .collect();
    CostMatrix::new(rows, cols, cells).unwrap()
}

/// Best (cardinality, cost) over every partial injection rows -> cols that
/// contains `pinned`, maximizing cardinality first.
pub fn brute_force(c: &CostMatrix, pinned: &[(usize, usize)]) -> Option<(usize, f64)> {
    let mut choice: Vec<Option<usize>> = vec![None; c.rows()];
    let mut used = vec![false; c.cols()];
    let mut best: Option<(usize, f64)> = None;
    fn rec(
        c: &CostMatrix,
        pinned: &[(usize, usize)],
        row: usize,
        choice: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Option<(usize, f64)>,
    ) {
        if row == c.rows() {
            if pinned.iter().any(|&(r, k)| choice[r] != Some(k)) {
                return;
            }
            let pairs: Vec<(usize, usize)> = choice
                .iter()
                .enumerate()
                .filter_map(|(r, k)| k.map(|k| (r, k)))
                .collect();
            let cand = (pairs.len(), c.total(&pairs));
            let better = match best {
                None => true,
                Some((n, cost)) => cand.0 > *n || (cand.0 == *n && cand.1 < *cost),
            };
            if better {
                *best = Some(cand);
            }
            return;
        }
        choice[row] = None;
        rec(c, pinned, row + 1, choice, used, best);
        for k in 0..c.cols() {
            if !used[k] && !c.is_forbidden(row, k) {
                used[k] = true;
                choice[row] = Some(k);
                rec(c, pinned, row + 1, choice, used, best);
                used[k] = false;
                choice[row] = None;
            }
        }
    }
    rec(c, pinned, 0, &mut choice, &mut used, &mut best);
    best
}

/// True when `pairs` is injective both ways and avoids forbidden cells.
pub fn is_valid_matching(c: &CostMatrix, pairs: &[(usize, usize)]) -> bool {
    let mut rows = vec![false; c.rows()];
    let mut cols = vec![false; c.cols()];
    pairs.iter().all(|&(r, k)| {
        let ok = r < c.rows() && k < c.cols() && !rows[r] && !cols[k] && !c.is_forbidden(r, k);
        if ok {
            rows[r] = true;
            cols[k] = true;
        }
        ok
    })
}

use std::collections::BTreeSet;

use deconfuse_core::assignment::{build_cost, solve};
use deconfuse_core::dda::{adm, coefficient_of_variation, ddm, tdm, DdaContext, TrackView};
use deconfuse_core::onms::{partition, suppression_scores, NmsThresholds};
use deconfuse_core::{
    cos_dist, iou, AssignmentSet, BBox, DetId, Detection, Embedding, FramePartition, TrackId,
    TrackerConfig,
};

pub fn random_unit(r: &mut ChaCha8Rng, dim: usize) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        if let Ok(e) = Embedding::new(v) {
            return e;
        }
    }
}

/// Detections and tracks crowded into a small area so that every
/// disambiguation pass has something to do.
pub struct RandomScene {
    pub detections: Vec<Detection>,
    pub tracks: Vec<TrackView>,
    pub kappa: f64,
}

pub fn random_scene(r: &mut ChaCha8Rng) -> RandomScene {
    let n_det = r.random_range(1..=8);
    let n_trk = r.random_range(1..=6);
    let boxes = |r: &mut ChaCha8Rng| {
        BBox::new(
            r.random_range(0.0..40.0),
            r.random_range(0.0..20.0),
            r.random_range(15.0..30.0),
            r.random_range(30.0..50.0),
        )
        .unwrap()
    };
    let detections = (0..n_det)
        .map(|_| {
            let b = boxes(r);
            let mut d = Detection::new(1, b, r.random_range(0.05..1.0));
            if r.random::<f64>() < 0.9 {
                d.embedding = Some(random_unit(r, 4));
            }
            d
        })
        .collect();
    let tracks = (0..n_trk)
        .map(|i| TrackView {
            id: TrackId(i as u64 + 1),
            predicted: boxes(r),
            feature: (r.random::<f64>() < 0.9).then(|| random_unit(r, 4)),
        })
        .collect();
    RandomScene {
        detections,
        tracks,
        kappa: r.random_range(0.05..0.6),
    }
}

/// Context the tracker would build: partition, then the gated first
/// association over reliable detections.
pub fn context(scene: &RandomScene) -> DdaContext<'_> {
    let cfg = TrackerConfig::default();
    let split = partition(&scene.detections, &cfg);
    let rows: Vec<&Detection> = split.first.iter().map(|d| &scene.detections[d.0]).collect();
    let predicted: Vec<BBox> = scene.tracks.iter().map(|t| t.predicted).collect();
    let cost = build_cost(&rows, &predicted, cfg.gate_first);
    let assignment = AssignmentSet::from_pairs(
        solve(&cost)
            .into_iter()
            .map(|(r, c)| (split.first[r], scene.tracks[c].id)),
    )
    .unwrap();
    DdaContext {
        detections: &scene.detections,
        assignment,
        first: split.first,
        second: split.second,
        tracks: scene.tracks.clone(),
        kappa: scene.kappa,
        gate: cfg.gate_first,
    }
}

/// Random frame with clustered boxes so overlaps of every size occur, and
/// confidences on a coarse grid so ties occur.
pub fn random_frame(r: &mut ChaCha8Rng) -> Vec<Detection> {
    let n = r.random_range(0..12);
    (0..n)
        .map(|_| {
            let b = BBox::new(
                r.random_range(0.0..60.0),
                r.random_range(0.0..60.0),
                r.random_range(10.0..40.0),
                r.random_range(10.0..40.0),
            )
            .unwrap();
            Detection::new(1, b, f64::from(r.random_range(0..=20u32)) / 20.0)
        })
        .collect()
}

/// Direct evaluation of the suppression score and the two-threshold rule.
#[allow(clippy::if_same_then_else)]
pub fn onms_oracle(dets: &[Detection], t: &NmsThresholds) -> FramePartition {
    let mut out = FramePartition::default();
    for (i, d) in dets.iter().enumerate() {
        let mut u = 0.0f64;
        for (j, o) in dets.iter().enumerate() {
            let higher = o.conf > d.conf || (o.conf == d.conf && j < i);
            if higher {
                u = u.max(iou(&d.bbox, &o.bbox));
            }
        }
        let c = d.conf;
        let id = DetId(i);
        if c >= t.conf_first && u <= t.nms_first {
            out.first.push(id);
        } else if c >= t.conf_second && c < t.conf_first && u <= t.nms_first {
            out.second.push(id);
        } else if c >= t.conf_first && u > t.nms_first && u <= t.nms_second {
            out.second.push(id);
        } else {
            out.discarded.push(id);
        }
    }
    out
}

/// Conventional split: one overlap threshold, two confidence bands.
pub fn bytetrack_split(dets: &[Detection], cfg: &TrackerConfig) -> FramePartition {
    let scores = suppression_scores(dets);
    let mut out = FramePartition::default();
    for (d, s) in dets.iter().zip(&scores) {
        if s.u > cfg.nms_first || d.conf < cfg.conf_second {
            out.discarded.push(s.det);
        } else if d.conf >= cfg.conf_first {
            out.first.push(s.det);
        } else {
            out.second.push(s.det);
        }
    }
    out
}

pub fn is_partition(p: &FramePartition, n: usize) -> bool {
    let mut all: Vec<usize> = p
        .first
        .iter()
        .chain(&p.second)
        .chain(&p.discarded)
        .map(|d| d.0)
        .collect();
    all.sort_unstable();
    all == (0..n).collect::<Vec<_>>()
}

fn sim(ctx: &DdaContext<'_>, d: DetId, t: TrackId) -> f64 {
    let track = ctx.tracks.iter().find(|x| x.id == t).unwrap();
    iou(&ctx.detections[d.0].bbox, &track.predicted)
}

fn dist(ctx: &DdaContext<'_>, d: DetId, t: TrackId) -> Option<f64> {
    let f = ctx.detections[d.0].embedding.as_ref()?;
    let g = ctx.tracks.iter().find(|x| x.id == t)?.feature.as_ref()?;
    Some(cos_dist(f, g).unwrap())
}

pub fn references_context(ctx: &DdaContext<'_>, a: &AssignmentSet, first: &[DetId]) -> bool {
    let tracks: BTreeSet<TrackId> = ctx.tracks.iter().map(|t| t.id).collect();
    a.iter()
        .all(|(d, t)| first.contains(&d) && tracks.contains(&t))
}

/// Checks every DDM replacement against recomputed similarities; returns the
/// number of replacements.
pub fn check_ddm(ctx: &DdaContext<'_>) -> usize {
    let out = ddm(ctx).unwrap();
    for rep in &out.replacements {
        assert!(rep.new_sim - rep.old_sim > ctx.kappa);
        assert_eq!(rep.new_sim, sim(ctx, rep.promoted, rep.track));
        assert_eq!(rep.old_sim, sim(ctx, rep.replaced, rep.track));
        assert!(out.assignment.contains(rep.promoted, rep.track));
    }
    // Nothing is demoted; promoted detections sit in exactly one pool.
    assert!(ctx.first.iter().all(|d| out.first.contains(d)));
    for d in &out.promoted {
        assert!(out.first.contains(d) && !out.second.contains(d));
    }
    let mut pools: Vec<DetId> = out.first.iter().chain(&out.second).copied().collect();
    pools.sort();
    let mut before: Vec<DetId> = ctx.first.iter().chain(&ctx.second).copied().collect();
    before.sort();
    assert_eq!(pools, before);
    assert!(AssignmentSet::from_pairs(out.assignment.pairs()).is_ok());
    assert!(references_context(ctx, &out.assignment, &out.first));
    out.replacements.len()
}

/// Recomputes each TDM blur set and its appearance argmin; returns the
/// number of detections moved to another trajectory.
pub fn check_tdm(ctx: &DdaContext<'_>) -> usize {
    let out = tdm(ctx, &ctx.assignment).unwrap();
    let unmatched: Vec<TrackId> = ctx
        .tracks
        .iter()
        .map(|t| t.id)
        .filter(|&t| ctx.assignment.det_of(t).is_none())
        .collect();
    let mut moved = 0;
    for dec in &out.decisions {
        let own = sim(ctx, dec.det, dec.original);
        let mut blur: Vec<TrackId> = unmatched
            .iter()
            .copied()
            .filter(|&t| own - sim(ctx, dec.det, t) < ctx.kappa && dist(ctx, dec.det, t).is_some())
            .collect();
        blur.push(dec.original);
        blur.sort();
        assert_eq!(dec.blur, blur);
        let best = blur
            .iter()
            .map(|&t| dist(ctx, dec.det, t).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(dec.chosen_dist, best);
        assert_eq!(dist(ctx, dec.det, dec.chosen), Some(best));
        if dec.assigned == Some(dec.chosen) {
            assert!(out.assignment.contains(dec.det, dec.chosen));
        }
        if dec.chosen != dec.original {
            moved += 1;
        }
    }
    assert!(AssignmentSet::from_pairs(out.assignment.pairs()).is_ok());
    assert!(references_context(ctx, &out.assignment, &ctx.first));
    moved
}

/// Recomputes every Cv and checks that applied re-matchings lower the
/// appearance cost; returns the number applied.
pub fn check_adm(ctx: &DdaContext<'_>) -> usize {
    let out = adm(ctx, &ctx.assignment).unwrap();
    for p in &out.pairs {
        let (da, ta) = p.a;
        let (db, tb) = p.b;
        let v = [
            sim(ctx, da, ta),
            sim(ctx, da, tb),
            sim(ctx, db, ta),
            sim(ctx, db, tb),
        ];
        let mean = v.iter().sum::<f64>() / 4.0;
        let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0).sqrt();
        match p.cv {
            Some(cv) => assert!((cv - sd / mean).abs() < 1e-12),
            None => assert_eq!(mean, 0.0),
        }
        assert_eq!(coefficient_of_variation(&v), p.cv);
    }
    let mut applied = 0;
    for comp in out.components.iter().filter(|c| c.applied) {
        let total = |pairs: &[(DetId, TrackId)]| -> f64 {
            pairs.iter().map(|&(d, t)| dist(ctx, d, t).unwrap()).sum()
        };
        assert!(total(&comp.after) < total(&comp.before));
        applied += 1;
    }
    assert!(references_context(ctx, &out.assignment, &ctx.first));
    // The set of matched detections and tracks never changes.
    let dets = |a: &AssignmentSet| a.iter().map(|(d, _)| d).collect::<BTreeSet<_>>();
    let trks = |a: &AssignmentSet| a.iter().map(|(_, t)| t).collect::<BTreeSet<_>>();
    assert_eq!(dets(&out.assignment), dets(&ctx.assignment));
    assert_eq!(trks(&out.assignment), trks(&ctx.assignment));
    applied
}
