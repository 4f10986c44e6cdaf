//! Deterministic synthetic scenes: ground truth, degraded detections and
//! identity-tagged embeddings.
//!
//! Agents follow piecewise-linear paths. Occlusion uses painter's order: an
//! agent is hidden by every agent with a higher index, and its visibility is
//! `1 - max IoU` against those. Confidence falls linearly with the hidden
//! fraction and detections are dropped when visibility is very low or, at
//! random, with probability rising with occlusion.
//!
//! Every random draw comes from a ChaCha stream keyed by the scenario seed,
//! one stream per purpose, so adding agents never perturbs another purpose's
//! draws and files are byte-identical across runs and platforms.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{iou, tlwh_to_center, BBox, Embedding};
use crate::io::{
    format_detections, format_embeddings, format_gt, write_atomic, MotRow, SequenceBundle,
};
use crate::types::Detection;

pub const DEFAULT_EMBED_DIM: usize = 32;

/// Largest per-component embedding noise at [`DEFAULT_EMBED_DIM`] for which
/// detections of one identity stay clearly closer to each other than to any
/// other identity.
pub const SEPARABLE_EMBED_NOISE: f64 = 0.1;

const LAYOUT_STREAM: u64 = 0;
const JITTER_STREAM: u64 = 1;
const DROP_STREAM: u64 = 2;
const EMBED_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: i64,
    pub width: f64,
    pub height: f64,
    /// Box centres at key frames, ascending; the agent exists from the first
    /// to the last key frame.
    pub waypoints: Vec<Waypoint>,
}

impl AgentSpec {
    pub fn center(&self, frame: u32) -> Option<(f64, f64)> {
        let first = self.waypoints.first()?;
        let last = self.waypoints.last()?;
        if frame < first.frame || frame > last.frame {
            return None;
        }
        let seg = self
            .waypoints
            .windows(2)
            .find(|w| frame <= w[1].frame)
            .map_or((first, first), |w| (&w[0], &w[1]));
        let (a, b) = seg;
        if a.frame == b.frame {
            return Some((b.x, b.y));
        }
        let t = f64::from(frame - a.frame) / f64::from(b.frame - a.frame);
        Some((a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
    }

    /// Ground-truth box, snapped to the 0.01 px grid of the text formats.
    pub fn bbox(&self, frame: u32) -> Option<BBox> {
        let (cx, cy) = self.center(frame)?;
        quantized(
            cx - self.width / 2.0,
            cy - self.height / 2.0,
            self.width,
            self.height,
        )
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn quantized(x: f64, y: f64, w: f64, h: f64) -> Option<BBox> {
    tlwh_to_center(round2(x), round2(y), round2(w), round2(h)).ok()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionModel {
    /// Confidence lost per unit of hidden fraction.
    pub conf_decay: f64,
    /// Drop probability per unit of hidden fraction.
    pub drop_slope: f64,
    /// Detections below this visibility are always dropped.
    pub min_visibility: f64,
}

impl Default for OcclusionModel {
    fn default() -> Self {
        Self {
            conf_decay: 1.0,
            drop_slope: 0.0,
            min_visibility: 0.15,
        }
    }
}

impl OcclusionModel {
    pub fn confidence(&self, visibility: f64) -> f64 {
        (1.0 - self.conf_decay * (1.0 - visibility)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub frames: u32,
    /// Width and height; every ground-truth box lies inside.
    pub arena: (f64, f64),
    pub agents: Vec<AgentSpec>,
    /// Detection jitter standard deviation in pixels.
    pub noise: f64,
    pub occlusion: OcclusionModel,
    pub embed_dim: usize,
    pub embed_noise: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let (aw, ah) = self.arena;
        for a in &self.agents {
            if a.waypoints.windows(2).any(|w| w[0].frame > w[1].frame) {
                return Err(Error::Config(format!(
                    "agent {} has unordered waypoints",
                    a.id
                )));
            }
            for f in 1..=self.frames {
                if let Some(b) = a.bbox(f) {
                    if b.left() < 0.0 || b.top() < 0.0 || b.right() > aw || b.bottom() > ah {
                        return Err(Error::Config(format!(
                            "agent {} leaves the arena at frame {f}",
                            a.id
                        )));
                    }
                }
            }
        }
        if self.embed_dim == 0 || self.noise < 0.0 || self.embed_noise < 0.0 {
            return Err(Error::Config("invalid noise or embedding settings".into()));
        }
        Ok(())
    }
}

/// Output of [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub gt: Vec<MotRow>,
    pub detections: SequenceBundle,
    /// Ground-truth id of each detection, parallel to `detections.frames`.
    pub sources: Vec<Vec<i64>>,
    /// Visibility of each ground-truth row, parallel to `gt`.
    pub visibility: Vec<f64>,
}

impl Generated {
    /// Writes `gt.txt`, `det.txt` and `emb.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_atomic(&dir.join("gt.txt"), &format_gt(&self.gt))?;
        write_atomic(&dir.join("det.txt"), &format_detections(&self.detections))?;
        write_atomic(&dir.join("emb.csv"), &format_embeddings(&self.detections))
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("standard deviation is finite and non-negative")
}

fn random_unit(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let n = normal(1.0);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| n.sample(r)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

/// `1 - max IoU` of `boxes[i]` against every present box with a higher index.
pub fn visibility(boxes: &[Option<BBox>], i: usize) -> f64 {
    let Some(b) = &boxes[i] else { return 0.0 };
    let hidden = boxes[i + 1..]
        .iter()
        .flatten()
        .map(|o| iou(b, o))
        .fold(0.0, f64::max);
    1.0 - hidden
}

/// Embedding for identity `base` with per-component noise, quantized to the
/// precision written to embedding files.
pub fn noisy_embedding(base: &[f64], sd: f64, r: &mut ChaCha8Rng) -> Embedding {
    let n = normal(sd);
    let unit = Embedding::new(base.to_vec()).expect("identity base is non-zero");
    loop {
        let v: Vec<f64> = unit.as_slice().iter().map(|x| x + n.sample(r)).collect();
        if let Ok(e) = Embedding::new(v) {
            let q: Vec<f64> = e
                .as_slice()
                .iter()
                .map(|x| (x * 1e6).round() / 1e6)
                .collect();
            if let Ok(q) = Embedding::new(q) {
                return q;
            }
        }
    }
}

pub fn generate(s: &Scenario) -> Generated {
    let mut jitter_rng = rng(s.seed, JITTER_STREAM);
    let mut drop_rng = rng(s.seed, DROP_STREAM);
    let mut embed_rng = rng(s.seed, EMBED_STREAM);
    let jitter = normal(s.noise);
    let bases: Vec<Vec<f64>> = s
        .agents
        .iter()
        .map(|_| random_unit(&mut embed_rng, s.embed_dim))
        .collect();

    let mut gt = Vec::new();
    let mut vis_out = Vec::new();
    let mut frames = Vec::new();
    let mut sources = Vec::new();
    for f in 1..=s.frames {
        let boxes: Vec<Option<BBox>> = s.agents.iter().map(|a| a.bbox(f)).collect();
        let mut dets = Vec::new();
        let mut src = Vec::new();
        for (i, a) in s.agents.iter().enumerate() {
            let Some(b) = boxes[i] else { continue };
            let vis = visibility(&boxes, i);
            gt.push(MotRow {
                frame: f,
                id: a.id,
                bbox: b,
                conf: 1.0,
            });
            vis_out.push(vis);
            // Draw every random number unconditionally so that one agent's
            // fate never shifts another's noise.
            let u: f64 = drop_rng.random();
            let d: [f64; 4] = std::array::from_fn(|_| jitter.sample(&mut jitter_rng));
            let emb = noisy_embedding(&bases[i], s.embed_noise, &mut embed_rng);
            if vis < s.occlusion.min_visibility || u < s.occlusion.drop_slope * (1.0 - vis) {
                continue;
            }
            let [x, y, w, h] = b.to_tlwh();
            let Some(jb) = quantized(
                x + d[0] - d[2] / 2.0,
                y + d[1] - d[3] / 2.0,
                (w + d[2]).max(1.0),
                (h + d[3]).max(1.0),
            ) else {
                continue;
            };
            let conf = round2(s.occlusion.confidence(vis));
            dets.push(Detection::new(f, jb, conf).with_embedding(emb));
            src.push(a.id);
        }
        frames.push(dets);
        sources.push(src);
    }
    Generated {
        gt,
        detections: SequenceBundle {
            name: format!("synth-{}", s.seed),
            frames,
        },
        sources,
        visibility: vis_out,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Crossing,
    Occlusion,
    Fragmentation,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [Self::Crossing, Self::Occlusion, Self::Fragmentation];

    pub fn build(self, seed: u64) -> Scenario {
        match self {
            Self::Crossing => crossing_scenario(seed),
            Self::Occlusion => occlusion_scenario(seed),
            Self::Fragmentation => fragmentation_scenario(seed),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Crossing => "crossing",
            Self::Occlusion => "occlusion",
            Self::Fragmentation => "fragmentation",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crossing" => Ok(Self::Crossing),
            "occlusion" => Ok(Self::Occlusion),
            "fragmentation" => Ok(Self::Fragmentation),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected crossing, occlusion or fragmentation)"
            ))),
        }
    }
}

const ARENA: (f64, f64) = (960.0, 540.0);
const FRAMES: u32 = 60;

fn base_scenario(seed: u64, agents: Vec<AgentSpec>, occlusion: OcclusionModel) -> Scenario {
    Scenario {
        seed,
        frames: FRAMES,
        arena: ARENA,
        agents,
        noise: 1.0,
        occlusion,
        embed_dim: DEFAULT_EMBED_DIM,
        embed_noise: SEPARABLE_EMBED_NOISE,
    }
}

fn wp(frame: u32, x: f64, y: f64) -> Waypoint {
    Waypoint { frame, x, y }
}

/// Frame at which the crossing agents meet.
pub const CROSSING_FRAME: u32 = FRAMES / 2;

/// Two agents approach a common point from different headings, meet there at
/// [`CROSSING_FRAME`] and leave along each other's heading, so that each one
/// continues where a constant-velocity model expects the other.
pub fn crossing_scenario(seed: u64) -> Scenario {
    let mut r = rng(seed, LAYOUT_STREAM);
    let (cx, cy) = (r.random_range(380.0..580.0), r.random_range(220.0..320.0));
    let speed = r.random_range(3.0..5.0);
    let heading_a: f64 = r.random_range(-0.5..0.5);
    let heading_b = heading_a + std::f64::consts::PI + r.random_range(-0.8..0.8);
    let (w, h) = (r.random_range(36.0..48.0), r.random_range(80.0..100.0));
    let m = CROSSING_FRAME;
    let span = f64::from(m - 1);
    let leg = |heading: f64, t: f64| {
        (
            cx + heading.cos() * speed * t,
            cy + heading.sin() * speed * t,
        )
    };
    let agent = |id: i64, incoming: f64, outgoing: f64| {
        let (x0, y0) = leg(incoming, -span);
        let (x1, y1) = leg(outgoing, f64::from(FRAMES - m));
        AgentSpec {
            id,
            width: w,
            height: h,
            waypoints: vec![wp(1, x0, y0), wp(m, cx, cy), wp(FRAMES, x1, y1)],
        }
    };
    // Agent 2 walks slightly offset so the pair never coincides exactly.
    let mut b = agent(2, heading_b, heading_a);
    let off = r.random_range(0.15..0.3) * w;
    for p in &mut b.waypoints {
        p.y += off;
    }
    base_scenario(
        seed,
        vec![agent(1, heading_a, heading_b), b],
        OcclusionModel {
            conf_decay: 0.6,
            drop_slope: 0.3,
            min_visibility: 0.15,
        },
    )
}

/// Occlusion model under which a detection hidden behind a box at IoU in
/// `(0.7, 0.85]` keeps a confidence of at least 0.6.
pub const OCCLUSION_MODEL: OcclusionModel = OcclusionModel {
    conf_decay: 0.4,
    drop_slope: 0.0,
    min_visibility: 0.15,
};

/// Consecutive frames in which the occluded agent of
/// [`occlusion_scenario`] is fully hidden and therefore undetected.
pub const OCCLUSION_HIDDEN_FRAMES: u32 = 4;

/// A walker is overtaken by a faster agent in front of it: partial overlap,
/// a short full occlusion, then partial overlap again.
pub fn occlusion_scenario(seed: u64) -> Scenario {
    let mut r = rng(seed, LAYOUT_STREAM);
    let (w, h) = (r.random_range(40.0..50.0), r.random_range(90.0..110.0));
    let y = r.random_range(150.0..390.0);
    let x0 = r.random_range(150.0..250.0);
    let v_slow = r.random_range(2.0..3.0);
    let walker = AgentSpec {
        id: 1,
        width: w,
        height: h,
        waypoints: vec![
            wp(1, x0, y),
            wp(FRAMES, x0 + v_slow * f64::from(FRAMES - 1), y),
        ],
    };
    // The occluder catches up around mid-sequence; relative speed sets how
    // long the overlap lasts.
    let rel = w / 40.0;
    let meet = f64::from(FRAMES) / 2.0;
    let v_fast = v_slow + rel;
    let start = x0 + v_slow * (meet - 1.0) - v_fast * (meet - 1.0);
    let dy = r.random_range(0.0..2.0);
    let occluder = AgentSpec {
        id: 2,
        width: w,
        height: h,
        waypoints: vec![
            wp(1, start, y + dy),
            wp(FRAMES, start + v_fast * f64::from(FRAMES - 1), y + dy),
        ],
    };
    base_scenario(seed, vec![walker, occluder], OCCLUSION_MODEL)
}

/// Occlusion model under which partial occlusion near IoU 0.5 produces
/// confidences between the unreliable and reliable thresholds.
pub const FRAGMENTATION_MODEL: OcclusionModel = OcclusionModel {
    conf_decay: 1.0,
    drop_slope: 0.0,
    min_visibility: 0.15,
};

/// A walker passes behind a standing agent that hides about half of it for a
/// stretch of frames.
pub fn fragmentation_scenario(seed: u64) -> Scenario {
    let mut r = rng(seed, LAYOUT_STREAM);
    let (w, h) = (r.random_range(40.0..50.0), r.random_range(90.0..110.0));
    let y = r.random_range(150.0..390.0);
    let v = r.random_range(2.0..3.0);
    let x0 = r.random_range(150.0..250.0);
    let x_mid = x0 + v * (f64::from(FRAMES) / 2.0 - 1.0);
    let walker = AgentSpec {
        id: 1,
        width: w,
        height: h,
        waypoints: vec![wp(1, x0, y), wp(FRAMES, x0 + v * f64::from(FRAMES - 1), y)],
    };
    // Shifted down by a third of the height: IoU 2/4 = 0.5 when aligned in x.
    let stander = AgentSpec {
        id: 2,
        width: w,
        height: h,
        waypoints: vec![wp(1, x_mid, y + h / 3.0), wp(FRAMES, x_mid, y + h / 3.0)],
    };
    base_scenario(seed, vec![walker, stander], FRAGMENTATION_MODEL)
}
