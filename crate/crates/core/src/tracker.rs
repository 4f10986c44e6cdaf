//! Per-frame orchestration and track lifecycle.
//!
//! Each [`Tracker::step`] partitions the frame's detections, predicts every
//! live track, runs the first association over reliable detections, refines
//! it with the disambiguation passes, associates the remaining unreliable
//! detections with still-unmatched tracks, and finally updates, spawns and
//! retires tracks.

use crate::assignment::{build_cost, solve};
use crate::config::TrackerConfig;
use crate::dda::{run_dda, DdaContext, DdaResult, DdaToggles, TrackView};
use crate::error::{Error, Result};
use crate::geometry::{BBox, Embedding};
use crate::motion::{KalmanState, MotionModel, NoiseModel};
use crate::onms::{partition_with, NmsThresholds};
use crate::types::{AssignmentSet, DetId, Detection, TrackId};

/// Consecutive hits a tentative track needs before it is reported.
pub const MIN_HITS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Tentative,
    Tracked,
    Lost,
    Removed,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: TrackId,
    pub state: TrackState,
    pub kf: KalmanState,
    /// Smoothed appearance; `None` until a detection with an embedding is
    /// matched from the reliable pool.
    pub feature: Option<Embedding>,
    pub hits: u32,
    pub start_frame: u32,
    pub last_update_frame: u32,
    pub history: Vec<(u32, BBox)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOutput {
    pub id: TrackId,
    pub bbox: BBox,
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: u32,
    /// Sorted by id.
    pub outputs: Vec<TrackOutput>,
}

/// Pipeline stages that can be switched off for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub onms: bool,
    pub ddm: bool,
    pub tdm: bool,
    pub adm: bool,
    pub second_stage: bool,
}

impl Default for Components {
    fn default() -> Self {
        Self {
            onms: true,
            ddm: true,
            tdm: true,
            adm: true,
            second_stage: true,
        }
    }
}

impl Components {
    /// Two-stage motion-only association with single-threshold NMS.
    pub fn baseline() -> Self {
        Self {
            onms: false,
            ddm: false,
            tdm: false,
            adm: false,
            second_stage: true,
        }
    }

    pub fn dda(&self) -> DdaToggles {
        DdaToggles {
            ddm: self.ddm,
            tdm: self.tdm,
            adm: self.adm,
        }
    }
}

/// Moving-average appearance update; the first observation is taken as is.
pub fn update_feature(
    feature: Option<&Embedding>,
    observation: &Embedding,
    alpha: f64,
) -> Result<Embedding> {
    match feature {
        None => Ok(observation.clone()),
        Some(f) => f.blend(observation, alpha),
    }
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    components: Components,
    motion: MotionModel,
    tracks: Vec<Track>,
    next_id: u64,
    first_frame: Option<u32>,
    last_frame: Option<u32>,
    results: Vec<FrameResult>,
    last_dda: Option<DdaResult>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            components: Components::default(),
            motion: MotionModel::default(),
            tracks: Vec::new(),
            next_id: 1,
            first_frame: None,
            last_frame: None,
            results: Vec::new(),
            last_dda: None,
        })
    }

    pub fn with_components(mut self, components: Components) -> Self {
        self.components = components;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.motion = MotionModel::new(noise);
        self
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn components(&self) -> Components {
        self.components
    }

    /// Live tracks (everything not yet removed).
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn tracks_created(&self) -> u64 {
        self.next_id - 1
    }

    /// Disambiguation trace of the most recent frame, when it ran.
    pub fn last_dda(&self) -> Option<&DdaResult> {
        self.last_dda.as_ref()
    }

    pub fn step(&mut self, frame: u32, dets: &[Detection]) -> Result<FrameResult> {
        if let Some(previous) = self.last_frame {
            if frame <= previous {
                return Err(Error::FrameOrder {
                    previous,
                    got: frame,
                });
            }
        }
        if let Some(d) = dets.iter().find(|d| d.frame != frame) {
            return Err(Error::WrongFrame {
                expected: frame,
                got: d.frame,
            });
        }
        let elapsed = self.last_frame.map_or(1, |p| frame - p);
        self.last_frame = Some(frame);
        let first_frame = *self.first_frame.get_or_insert(frame);

        let thresholds = if self.components.onms {
            NmsThresholds::from_config(&self.cfg)
        } else {
            NmsThresholds::single(&self.cfg)
        };
        let split = partition_with(dets, &thresholds);

        for t in &mut self.tracks {
            for _ in 0..elapsed {
                t.kf = self.motion.predict(&t.kf);
            }
        }
        let views: Vec<TrackView> = self
            .tracks
            .iter()
            .map(|t| TrackView {
                id: t.id,
                predicted: t.kf.bbox(),
                feature: t.feature.clone(),
            })
            .collect();
        let predicted: Vec<BBox> = views.iter().map(|v| v.predicted).collect();

        // First association: reliable detections against every live track.
        let rows: Vec<&Detection> = split.first.iter().map(|d| &dets[d.0]).collect();
        let cost = build_cost(&rows, &predicted, self.cfg.gate_first);
        let p = AssignmentSet::from_pairs(
            solve(&cost)
                .into_iter()
                .map(|(r, c)| (split.first[r], views[c].id)),
        )?;

        let toggles = self.components.dda();
        let (first_assignment, first, second) = if toggles.any() {
            let ctx = DdaContext {
                detections: dets,
                assignment: p,
                first: split.first.clone(),
                second: split.second.clone(),
                tracks: views.clone(),
                kappa: self.cfg.kappa,
                gate: self.cfg.gate_first,
            };
            let out = run_dda(&ctx, toggles)?;
            let res = (
                out.assignment.clone(),
                out.first.clone(),
                out.second.clone(),
            );
            self.last_dda = Some(out);
            res
        } else {
            self.last_dda = None;
            (p, split.first.clone(), split.second.clone())
        };

        // Second association: leftover unreliable detections, motion only.
        let mut second_pairs: Vec<(DetId, TrackId)> = Vec::new();
        if self.components.second_stage && !second.is_empty() {
            let free: Vec<usize> = (0..views.len())
                .filter(|&i| first_assignment.det_of(views[i].id).is_none())
                .collect();
            let rows: Vec<&Detection> = second.iter().map(|d| &dets[d.0]).collect();
            let boxes: Vec<BBox> = free.iter().map(|&i| predicted[i]).collect();
            let cost = build_cost(&rows, &boxes, self.cfg.gate_second);
            second_pairs = solve(&cost)
                .into_iter()
                .map(|(r, c)| (second[r], views[free[c]].id))
                .collect();
        }

        log::debug!(
            "frame {frame}: {} reliable, {} unreliable, {} first matches, {} second matches",
            first.len(),
            second.len(),
            first_assignment.len(),
            second_pairs.len()
        );

        let mut outputs = Vec::new();
        let mut matched = vec![false; self.tracks.len()];
        let matches = first_assignment
            .iter()
            .map(|(d, t)| (d, t, true))
            .chain(second_pairs.iter().map(|&(d, t)| (d, t, false)));
        for (d, tid, reliable) in matches {
            let i = self
                .tracks
                .iter()
                .position(|t| t.id == tid)
                .expect("matched track is live");
            let det = &dets[d.0];
            let t = &mut self.tracks[i];
            t.kf = self.motion.update(&t.kf, &det.bbox)?;
            if reliable {
                if let Some(e) = &det.embedding {
                    t.feature = Some(update_feature(t.feature.as_ref(), e, self.cfg.ema_alpha)?);
                }
            }
            t.hits += 1;
            t.last_update_frame = frame;
            t.state = match t.state {
                TrackState::Tentative if t.hits < MIN_HITS => TrackState::Tentative,
                _ => TrackState::Tracked,
            };
            let bbox = t.kf.bbox();
            t.history.push((frame, bbox));
            matched[i] = true;
            if t.state == TrackState::Tracked {
                outputs.push(TrackOutput {
                    id: t.id,
                    bbox,
                    conf: det.conf,
                });
            }
        }

        for (t, &hit) in self.tracks.iter_mut().zip(&matched) {
            if hit {
                continue;
            }
            t.state = match t.state {
                TrackState::Tentative => TrackState::Removed,
                TrackState::Tracked | TrackState::Lost
                    if frame - t.last_update_frame > self.cfg.max_age =>
                {
                    TrackState::Removed
                }
                TrackState::Tracked => TrackState::Lost,
                s => s,
            };
        }
        self.tracks.retain(|t| t.state != TrackState::Removed);

        for &d in &first {
            let det = &dets[d.0];
            if first_assignment.track_of(d).is_some() || det.conf < self.cfg.init_conf {
                continue;
            }
            let id = TrackId(self.next_id);
            self.next_id += 1;
            let state = if frame == first_frame {
                TrackState::Tracked
            } else {
                TrackState::Tentative
            };
            let kf = self.motion.init(&det.bbox);
            let bbox = kf.bbox();
            if state == TrackState::Tracked {
                outputs.push(TrackOutput {
                    id,
                    bbox,
                    conf: det.conf,
                });
            }
            self.tracks.push(Track {
                id,
                state,
                kf,
                feature: det.embedding.clone(),
                hits: 1,
                start_frame: frame,
                last_update_frame: frame,
                history: vec![(frame, bbox)],
            });
        }

        outputs.sort_by_key(|o| o.id);
        let result = FrameResult { frame, outputs };
        self.results.push(result.clone());
        Ok(result)
    }

    /// Steps frames `1..=frames.len()`, where `frames[i]` holds frame `i + 1`.
    pub fn run(&mut self, frames: &[Vec<Detection>]) -> Result<Vec<FrameResult>> {
        frames
            .iter()
            .enumerate()
            .map(|(i, dets)| self.step(i as u32 + 1, dets))
            .collect()
    }

    /// All frame results produced so far.
    pub fn finalize(self) -> Vec<FrameResult> {
        self.results
    }
}
