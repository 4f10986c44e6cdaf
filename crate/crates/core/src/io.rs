//! MOT Challenge text formats, embedding sidecars and config files.
//!
//! Detection, ground-truth and result files share one line layout,
//! `frame,id,x,y,w,h,conf,...`, with top-left box coordinates. Embedding
//! sidecars hold one comma-separated vector per detection record, in the
//! same order as the detection file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::{tlwh_to_center, BBox, Embedding};
use crate::tracker::FrameResult;
use crate::types::Detection;

/// One video's detections, grouped by frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceBundle {
    pub name: String,
    /// `frames[i]` holds frame `i + 1`; frames without detections are empty.
    pub frames: Vec<Vec<Detection>>,
}

impl SequenceBundle {
    pub fn frame_count(&self) -> u32 {
        self.frames.len() as u32
    }

    pub fn detection_count(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    /// True when every detection carries an embedding.
    pub fn has_embeddings(&self) -> bool {
        self.frames.iter().flatten().all(|d| d.embedding.is_some())
    }
}

/// A parsed ground-truth or result line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRow {
    pub frame: u32,
    pub id: i64,
    pub bbox: BBox,
    /// Confidence for results and detections, the consider flag for ground
    /// truth.
    pub conf: f64,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_row(path: &Path, n: usize, line: &str) -> Result<MotRow> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 7 {
        return Err(parse_err(
            path,
            n,
            format!("expected at least 7 fields, found {}", fields.len()),
        ));
    }
    let num = |i: usize, name: &str| -> Result<f64> {
        let v: f64 = fields[i]
            .parse()
            .map_err(|_| parse_err(path, n, format!("{name}: '{}' is not a number", fields[i])))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(parse_err(path, n, format!("{name} is not finite")))
        }
    };
    let frame: u32 = fields[0]
        .parse()
        .map_err(|_| parse_err(path, n, format!("frame: '{}' is not an integer", fields[0])))?;
    if frame == 0 {
        return Err(parse_err(path, n, "frames are numbered from 1"));
    }
    let id = num(1, "id")?;
    if id.fract() != 0.0 {
        return Err(parse_err(
            path,
            n,
            format!("id: '{}' is not an integer", fields[1]),
        ));
    }
    let (x, y, w, h) = (num(2, "x")?, num(3, "y")?, num(4, "w")?, num(5, "h")?);
    if w <= 0.0 || h <= 0.0 {
        return Err(parse_err(path, n, format!("non-positive box size {w}x{h}")));
    }
    let bbox = tlwh_to_center(x, y, w, h).map_err(|e| parse_err(path, n, e.to_string()))?;
    Ok(MotRow {
        frame,
        id: id as i64,
        bbox,
        conf: num(6, "conf")?,
    })
}

/// Rows of any MOT-format file, in file order.
pub fn read_mot(path: &Path) -> Result<Vec<MotRow>> {
    let text = read_text(path)?;
    records(&text).map(|(n, l)| parse_row(path, n, l)).collect()
}

/// Ground truth rows; rows whose consider flag is 0 are dropped.
pub fn read_gt(path: &Path) -> Result<Vec<MotRow>> {
    Ok(read_mot(path)?
        .into_iter()
        .filter(|r| r.conf != 0.0)
        .collect())
}

pub fn read_det(path: &Path) -> Result<SequenceBundle> {
    let text = read_text(path)?;
    let mut frames: Vec<Vec<Detection>> = Vec::new();
    for (n, line) in records(&text) {
        let row = parse_row(path, n, line)?;
        if !(0.0..=1.0).contains(&row.conf) {
            return Err(parse_err(
                path,
                n,
                format!("confidence {} outside [0, 1]", row.conf),
            ));
        }
        let f = row.frame as usize;
        if frames.len() < f {
            frames.resize_with(f, Vec::new);
        }
        let mut det = Detection::new(row.frame, row.bbox, row.conf);
        det.source_line = n;
        frames[f - 1].push(det);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SequenceBundle { name, frames })
}

/// Attaches the k-th embedding row to the k-th detection record.
pub fn read_embeddings(path: &Path, mut bundle: SequenceBundle) -> Result<SequenceBundle> {
    let text = read_text(path)?;
    let mut rows: Vec<Embedding> = Vec::new();
    for (n, line) in records(&text) {
        let values = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, n, format!("'{}' is not a number", v.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.dim() != values.len() {
                return Err(parse_err(
                    path,
                    n,
                    format!("dimension {} differs from {}", values.len(), first.dim()),
                ));
            }
        }
        rows.push(Embedding::new(values).map_err(|e| parse_err(path, n, e.to_string()))?);
    }
    let count = bundle.detection_count();
    if rows.len() != count {
        return Err(parse_err(
            path,
            0,
            format!("{} embedding rows for {count} detections", rows.len()),
        ));
    }
    let mut lines: Vec<usize> = bundle
        .frames
        .iter()
        .flatten()
        .map(|d| d.source_line)
        .collect();
    lines.sort_unstable();
    for det in bundle.frames.iter_mut().flatten() {
        let k = lines
            .binary_search(&det.source_line)
            .expect("line collected above");
        det.embedding = Some(rows[k].clone());
    }
    Ok(bundle)
}

pub fn read_config(path: &Path) -> Result<TrackerConfig> {
    TrackerConfig::parse(&read_text(path)?).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Fixed two-decimal formatting that never prints `-0.00`.
fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Formats `frame,id,x,y,w,h,conf,-1,-1,-1`.
pub fn format_row(frame: u32, id: i64, bbox: &BBox, conf: f64) -> String {
    let [x, y, w, h] = bbox.to_tlwh();
    format!(
        "{frame},{id},{},{},{},{},{},-1,-1,-1",
        fixed2(x),
        fixed2(y),
        fixed2(w),
        fixed2(h),
        fixed2(conf)
    )
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Result rows in output order, as they would read back from a file.
pub fn result_rows(results: &[FrameResult]) -> Vec<MotRow> {
    let mut rows: Vec<MotRow> = results
        .iter()
        .flat_map(|r| {
            r.outputs.iter().map(move |o| MotRow {
                frame: r.frame,
                id: o.id.0 as i64,
                bbox: o.bbox,
                conf: o.conf,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.id));
    rows
}

pub fn format_results(results: &[FrameResult]) -> String {
    let mut rows: Vec<(u32, u64, String)> = results
        .iter()
        .flat_map(|r| {
            r.outputs.iter().map(move |o| {
                (
                    r.frame,
                    o.id.0,
                    format_row(r.frame, o.id.0 as i64, &o.bbox, o.conf),
                )
            })
        })
        .collect();
    rows.sort_by_key(|(f, id, _)| (*f, *id));
    rows.into_iter()
        .fold(String::new(), |mut out, (_, _, line)| {
            out.push_str(&line);
            out.push('\n');
            out
        })
}

pub fn write_results(path: &Path, results: &[FrameResult]) -> Result<()> {
    write_atomic(path, &format_results(results))
}

/// Detection file with `-1` ids, in frame order.
pub fn format_detections(bundle: &SequenceBundle) -> String {
    let mut out = String::new();
    for d in bundle.frames.iter().flatten() {
        out.push_str(&format_row(d.frame, -1, &d.bbox, d.conf));
        out.push('\n');
    }
    out
}

/// Embedding sidecar matching [`format_detections`] line for line.
/// Detections without an embedding are skipped.
pub fn format_embeddings(bundle: &SequenceBundle) -> String {
    let mut out = String::new();
    for e in bundle
        .frames
        .iter()
        .flatten()
        .filter_map(|d| d.embedding.as_ref())
    {
        for (i, v) in e.as_slice().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:.6}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Ground-truth rows sorted by `(frame, id)`.
pub fn format_gt(rows: &[MotRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| (r.frame, r.id));
    let mut out = String::new();
    for r in &sorted {
        out.push_str(&format_row(r.frame, r.id, &r.bbox, r.conf));
        out.push('\n');
    }
    out
}
