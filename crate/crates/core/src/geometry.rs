//! Boxes, appearance embeddings and the similarity measures built on them.

use crate::error::{Error, Result};
use crate::types::Detection;

/// Axis-aligned box stored by center and extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if ![cx, cy, w, h].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox(format!(
                "non-finite component in ({cx}, {cy}, {w}, {h})"
            )));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox(format!("non-positive extent {w}x{h}")));
        }
        Ok(Self { cx, cy, w, h })
    }

    /// Builds a box from a filter state where the extent may have collapsed;
    /// width and height are floored at `min_extent`.
    pub(crate) fn from_state(cx: f64, cy: f64, w: f64, h: f64, min_extent: f64) -> Self {
        Self {
            cx,
            cy,
            w: w.max(min_extent),
            h: h.max(min_extent),
        }
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn to_tlwh(&self) -> [f64; 4] {
        center_to_tlwh(self)
    }
}

/// Converts a top-left anchored box into the center representation.
pub fn tlwh_to_center(x: f64, y: f64, w: f64, h: f64) -> Result<BBox> {
    BBox::new(x + w / 2.0, y + h / 2.0, w, h)
}

pub fn center_to_tlwh(b: &BBox) -> [f64; 4] {
    [b.cx - b.w / 2.0, b.cy - b.h / 2.0, b.w, b.h]
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Positional similarity between a detection and a track's predicted box.
pub fn loc_sim(d: &Detection, predicted: &BBox) -> f64 {
    iou(&d.bbox, predicted)
}

/// Unit-norm appearance feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// L2-normalizes `values`. Fails on empty, non-finite or zero vectors.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidEmbedding("empty vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding("non-finite component".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidEmbedding(
                "zero vector cannot be normalized".into(),
            ));
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    /// Exponential moving average toward `observation`, renormalized.
    pub fn blend(&self, observation: &Embedding, alpha: f64) -> Result<Embedding> {
        if self.dim() != observation.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: observation.dim(),
            });
        }
        let mixed: Vec<f64> = self
            .0
            .iter()
            .zip(&observation.0)
            .map(|(f, g)| alpha * f + (1.0 - alpha) * g)
            .collect();
        // Antipodal features with alpha = 0.5 cancel out; keep the observation.
        Embedding::new(mixed).or_else(|_| Ok(observation.clone()))
    }
}

/// Cosine distance `1 - <f, g>` between unit vectors, in `[0, 2]`.
pub fn cos_dist(f: &Embedding, g: &Embedding) -> Result<f64> {
    Ok((1.0 - f.dot(g)?).clamp(0.0, 2.0))
}
