//! CLEAR MOT counts (FP, FN, ID switches, MOTA) and IDF1.
//!
//! Boxes correspond when their IoU is at least [`IOU_THRESHOLD`]. CLEAR
//! matching keeps a ground-truth object's previous partner whenever it is
//! still close enough and solves the rest optimally; IDF1 matches identities
//! globally so as to maximize the number of corresponding frames.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::assignment::{min_cost_partial, solve, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::io::MotRow;

pub const IOU_THRESHOLD: f64 = 0.5;

/// Correspondences for one frame as `(gt index, prediction index)` pairs.
/// `previous` maps ground-truth ids to the prediction id they were last
/// matched with.
pub fn match_frame(
    gt: &[(i64, BBox)],
    preds: &[(i64, BBox)],
    previous: &BTreeMap<i64, i64>,
    threshold: f64,
) -> Vec<(usize, usize)> {
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut out = Vec::new();
    for (g, (gid, gbox)) in gt.iter().enumerate() {
        let Some(pid) = previous.get(gid) else {
            continue;
        };
        let kept = preds
            .iter()
            .enumerate()
            .find(|(p, (id, b))| id == pid && !pred_used[*p] && iou(gbox, b) >= threshold);
        if let Some((p, _)) = kept {
            gt_used[g] = true;
            pred_used[p] = true;
            out.push((g, p));
        }
    }
    let free_gt: Vec<usize> = (0..gt.len()).filter(|&g| !gt_used[g]).collect();
    let free_pred: Vec<usize> = (0..preds.len()).filter(|&p| !pred_used[p]).collect();
    let cost = CostMatrix::from_fn(free_gt.len(), free_pred.len(), |r, c| {
        let v = iou(&gt[free_gt[r]].1, &preds[free_pred[c]].1);
        (v >= threshold).then_some(1.0 - v)
    })
    .expect("IoU costs lie in [0, 1]");
    out.extend(
        solve(&cost)
            .into_iter()
            .map(|(r, c)| (free_gt[r], free_pred[c])),
    );
    out.sort_unstable();
    out
}

/// Raw counts for one sequence, or summed over several.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub gt_count: usize,
    pub pred_count: usize,
    pub matches: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    /// Frames where a ground-truth id and its globally matched prediction id
    /// correspond.
    pub idtp: usize,
}

impl Counts {
    pub fn mota(&self) -> Result<f64> {
        if self.gt_count == 0 {
            return Err(Error::EmptyGroundTruth);
        }
        let errors = self.false_positives + self.false_negatives + self.id_switches;
        Ok(1.0 - errors as f64 / self.gt_count as f64)
    }

    pub fn idf1(&self) -> f64 {
        let denom = self.gt_count + self.pred_count;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.idtp as f64 / denom as f64
        }
    }

    pub fn idfp(&self) -> usize {
        self.pred_count - self.idtp
    }

    pub fn idfn(&self) -> usize {
        self.gt_count - self.idtp
    }

    pub fn add(&mut self, o: &Counts) {
        self.gt_count += o.gt_count;
        self.pred_count += o.pred_count;
        self.matches += o.matches;
        self.false_positives += o.false_positives;
        self.false_negatives += o.false_negatives;
        self.id_switches += o.id_switches;
        self.idtp += o.idtp;
    }
}

type FrameBoxes = BTreeMap<u32, Vec<(i64, BBox)>>;

fn by_frame(rows: &[MotRow]) -> FrameBoxes {
    let mut out: FrameBoxes = BTreeMap::new();
    for r in rows {
        out.entry(r.frame).or_default().push((r.id, r.bbox));
    }
    out
}

/// CLEAR counts over a whole sequence.
pub fn clear(gt: &[MotRow], preds: &[MotRow]) -> Counts {
    let gt_frames = by_frame(gt);
    let pred_frames = by_frame(preds);
    let frames: BTreeSet<u32> = gt_frames
        .keys()
        .chain(pred_frames.keys())
        .copied()
        .collect();
    let mut last: BTreeMap<i64, i64> = BTreeMap::new();
    let mut c = Counts {
        gt_count: gt.len(),
        pred_count: preds.len(),
        ..Counts::default()
    };
    let empty = Vec::new();
    for f in frames {
        let g = gt_frames.get(&f).unwrap_or(&empty);
        let p = pred_frames.get(&f).unwrap_or(&empty);
        let m = match_frame(g, p, &last, IOU_THRESHOLD);
        for &(gi, pi) in &m {
            let (gid, pid) = (g[gi].0, p[pi].0);
            if last.insert(gid, pid).is_some_and(|prev| prev != pid) {
                c.id_switches += 1;
            }
        }
        c.matches += m.len();
        c.false_positives += p.len() - m.len();
        c.false_negatives += g.len() - m.len();
    }
    c
}

/// Identity-level true positives under the best one-to-one id matching.
pub fn idtp(gt: &[MotRow], preds: &[MotRow]) -> usize {
    let gt_ids: Vec<i64> = gt
        .iter()
        .map(|r| r.id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pred_ids: Vec<i64> = preds
        .iter()
        .map(|r| r.id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let overlap = overlap_counts(gt, preds, &gt_ids, &pred_ids);
    let pairs = min_cost_partial(gt_ids.len(), pred_ids.len(), |r, c| {
        let n = overlap[r][c];
        (n > 0).then_some(-(n as f64))
    });
    pairs.iter().map(|&(r, c)| overlap[r][c]).sum()
}

/// `out[g][p]`: frames where ground-truth id `gt_ids[g]` and prediction id
/// `pred_ids[p]` overlap by at least the IoU threshold.
pub fn overlap_counts(
    gt: &[MotRow],
    preds: &[MotRow],
    gt_ids: &[i64],
    pred_ids: &[i64],
) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    let pred_frames = by_frame(preds);
    for g in gt {
        let Some(ps) = pred_frames.get(&g.frame) else {
            continue;
        };
        let gi = gt_ids.binary_search(&g.id).expect("id collected");
        for (pid, b) in ps {
            if iou(&g.bbox, b) >= IOU_THRESHOLD {
                let pi = pred_ids.binary_search(pid).expect("id collected");
                out[gi][pi] += 1;
            }
        }
    }
    out
}

pub fn evaluate(gt: &[MotRow], preds: &[MotRow]) -> Counts {
    Counts {
        idtp: idtp(gt, preds),
        ..clear(gt, preds)
    }
}

/// Error when predictions use frames the ground truth does not cover.
pub fn check_frame_range(gt: &[MotRow], preds: &[MotRow]) -> Result<()> {
    let Some(last) = gt.iter().map(|r| r.frame).max() else {
        return Err(Error::EmptyGroundTruth);
    };
    match preds.iter().map(|r| r.frame).max() {
        Some(p) if p > last => Err(Error::FrameRange(format!(
            "results reach frame {p} but ground truth ends at frame {last}"
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub sequences: Vec<(String, Counts)>,
}

impl EvalReport {
    pub fn push(&mut self, name: impl Into<String>, counts: Counts) {
        self.sequences.push((name.into(), counts));
    }

    pub fn total(&self) -> Counts {
        let mut t = Counts::default();
        for (_, c) in &self.sequences {
            t.add(c);
        }
        t
    }

    fn rows(&self) -> Vec<(String, Counts)> {
        let mut rows = self.sequences.clone();
        if rows.len() != 1 {
            rows.push(("OVERALL".to_string(), self.total()));
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,mota,idf1,idsw,fp,fn,gt,idtp\n");
        for (name, c) in self.rows() {
            let mota = c.mota().map_or("nan".to_string(), |m| format!("{m:.6}"));
            writeln!(
                out,
                "{name},{mota},{:.6},{},{},{},{},{}",
                c.idf1(),
                c.id_switches,
                c.false_positives,
                c.false_negatives,
                c.gt_count,
                c.idtp
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn to_table(&self) -> String {
        let header = ["sequence", "MOTA", "IDF1", "IDSW", "FP", "FN", "GT"];
        let body: Vec<[String; 7]> = self
            .rows()
            .into_iter()
            .map(|(name, c)| {
                [
                    name,
                    c.mota()
                        .map_or("-".to_string(), |m| format!("{:.1}", 100.0 * m)),
                    format!("{:.1}", 100.0 * c.idf1()),
                    c.id_switches.to_string(),
                    c.false_positives.to_string(),
                    c.false_negatives.to_string(),
                    c.gt_count.to_string(),
                ]
            })
            .collect();
        render_table(&header, &body)
    }
}

/// Left-aligned first column, right-aligned rest.
pub fn render_table<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths: [usize; N] = header.map(str::len);
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                write!(s, "{cell:<w$}").expect("writing to a String");
            } else {
                write!(s, "  {cell:>w$}").expect("writing to a String");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header);
    for r in rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&cells);
    }
    out
}
