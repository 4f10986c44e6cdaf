use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use deconfuse_core::io::{read_config, read_det, read_embeddings, write_results, SequenceBundle};
use deconfuse_core::{Components, Tracker, TrackerConfig};
use rayon::prelude::*;

use crate::Toggles;

#[derive(Args)]
pub struct TrackArgs {
    /// Detection file(s) in MOT format; several files are tracked in parallel.
    #[arg(long, required = true, num_args = 1..)]
    det: Vec<PathBuf>,
    /// Embedding sidecar(s), one per detection file, in the same order.
    #[arg(long, num_args = 1..)]
    emb: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Result file, or a directory when several detection files are given.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    toggles: Toggles,
}

/// Output name for a detection file: its stem, or the enclosing directory
/// for the MOT layout `<sequence>/det/det.txt`.
fn sequence_name(det: &Path) -> String {
    let stem = det
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem != "det" {
        return stem;
    }
    det.ancestors()
        .skip(1)
        .filter_map(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .find(|n| n != "det")
        .unwrap_or(stem)
}

pub fn load_config(path: Option<&Path>) -> anyhow::Result<TrackerConfig> {
    match path {
        Some(p) => Ok(read_config(p)?),
        None => Ok(TrackerConfig::default()),
    }
}

/// Reads detections and, when the sidecar exists, their embeddings.
pub fn load_sequence(
    det: &Path,
    emb: Option<&Path>,
    components: Components,
) -> anyhow::Result<SequenceBundle> {
    let bundle = read_det(det)?;
    let wants_appearance = components.tdm || components.adm;
    match emb {
        Some(e) if e.exists() => Ok(read_embeddings(e, bundle)?),
        Some(e) => {
            if wants_appearance {
                log::warn!(
                    "embedding file {} not found; TDM and ADM will leave associations unchanged",
                    e.display()
                );
            }
            Ok(bundle)
        }
        None => {
            if wants_appearance {
                log::warn!(
                    "no embeddings for {}; TDM and ADM will leave associations unchanged",
                    det.display()
                );
            }
            Ok(bundle)
        }
    }
}

struct Summary {
    name: String,
    frames: u32,
    detections: usize,
    tracks_created: u64,
    output_ids: usize,
    out: PathBuf,
}

fn track_one(
    det: &Path,
    emb: Option<&Path>,
    out: &Path,
    cfg: &TrackerConfig,
    components: Components,
) -> anyhow::Result<Summary> {
    let bundle = load_sequence(det, emb, components)?;
    let mut tracker = Tracker::new(cfg.clone())?.with_components(components);
    let results = tracker
        .run(&bundle.frames)
        .with_context(|| format!("tracking {}", det.display()))?;
    write_results(out, &results)?;
    let ids: BTreeSet<_> = results
        .iter()
        .flat_map(|r| r.outputs.iter().map(|o| o.id))
        .collect();
    Ok(Summary {
        name: sequence_name(det),
        frames: bundle.frame_count(),
        detections: bundle.detection_count(),
        tracks_created: tracker.tracks_created(),
        output_ids: ids.len(),
        out: out.to_path_buf(),
    })
}

pub fn run(args: &TrackArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    if !args.emb.is_empty() && args.emb.len() != args.det.len() {
        bail!(
            "{} embedding files given for {} detection files",
            args.emb.len(),
            args.det.len()
        );
    }
    for d in &args.det {
        if !d.is_file() {
            bail!("detection file {} does not exist", d.display());
        }
    }
    let cfg = load_config(args.config.as_deref())?;
    let components = args.toggles.components();

    let outs: Vec<PathBuf> = if args.det.len() == 1 {
        vec![args.out.clone()]
    } else {
        std::fs::create_dir_all(&args.out)
            .with_context(|| format!("creating {}", args.out.display()))?;
        let names: Vec<String> = args.det.iter().map(|d| sequence_name(d)).collect();
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            bail!("detection files do not have distinct sequence names");
        }
        names
            .iter()
            .map(|n| args.out.join(format!("{n}.txt")))
            .collect()
    };

    let summaries = (0..args.det.len())
        .into_par_iter()
        .map(|i| {
            track_one(
                &args.det[i],
                args.emb.get(i).map(PathBuf::as_path),
                &outs[i],
                &cfg,
                components,
            )
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    for s in &summaries {
        println!(
            "{}: {} frames, {} detections, {} tracks created, {} ids in output -> {}",
            s.name,
            s.frames,
            s.detections,
            s.tracks_created,
            s.output_ids,
            s.out.display()
        );
    }
    println!("runtime: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}
