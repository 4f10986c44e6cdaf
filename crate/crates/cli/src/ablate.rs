use std::path::PathBuf;

use anyhow::bail;
use clap::Args;
use deconfuse_core::io::{read_gt, result_rows, write_atomic, MotRow, SequenceBundle};
use deconfuse_core::metrics::{evaluate, render_table, Counts};
use deconfuse_core::synth::{generate, ScenarioKind};
use deconfuse_core::{Components, Tracker, TrackerConfig};
use rayon::prelude::*;

use crate::track::{load_config, load_sequence};

#[derive(Args)]
pub struct AblateArgs {
    /// Confusion factors to compare.
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Components to switch on and off in every combination
    /// (onms, ddm, tdm, adm, second); the others stay on.
    #[arg(long, value_delimiter = ',')]
    components: Vec<String>,
    /// Synthetic scene used when no detection file is given.
    #[arg(long, default_value = "crossing")]
    scenario: ScenarioKind,
    /// Number of synthetic seeds, starting at 0.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Detection file to evaluate instead of synthetic scenes.
    #[arg(long, requires = "gt")]
    det: Option<PathBuf>,
    #[arg(long, requires = "det")]
    emb: Option<PathBuf>,
    #[arg(long, requires = "det")]
    gt: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

const NAMES: [&str; 5] = ["onms", "ddm", "tdm", "adm", "second"];

fn set(c: &mut Components, name: &str, on: bool) {
    match name {
        "onms" => c.onms = on,
        "ddm" => c.ddm = on,
        "tdm" => c.tdm = on,
        "adm" => c.adm = on,
        "second" => c.second_stage = on,
        _ => unreachable!("names are validated"),
    }
}

/// Every on/off combination of `names`, all off first; the first name
/// toggles fastest.
pub fn toggle_sets(names: &[String]) -> Vec<Components> {
    (0..1u32 << names.len())
        .map(|mask| {
            let mut c = Components::default();
            for (i, n) in names.iter().enumerate() {
                set(&mut c, n, mask & (1 << i) != 0);
            }
            c
        })
        .collect()
}

fn mark(on: bool) -> String {
    if on { "x" } else { "-" }.to_string()
}

fn score(
    data: &[(SequenceBundle, Vec<MotRow>)],
    cfg: &TrackerConfig,
    components: Components,
) -> anyhow::Result<Counts> {
    let per_seq = data
        .par_iter()
        .map(|(bundle, gt)| -> anyhow::Result<Counts> {
            let mut t = Tracker::new(cfg.clone())?.with_components(components);
            let results = t.run(&bundle.frames)?;
            Ok(evaluate(gt, &result_rows(&results)))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut report = deconfuse_core::metrics::EvalReport::default();
    for (i, c) in per_seq.into_iter().enumerate() {
        report.push(i.to_string(), c);
    }
    Ok(report.total())
}

pub fn run(args: &AblateArgs) -> anyhow::Result<()> {
    for n in &args.components {
        if !NAMES.contains(&n.as_str()) {
            bail!(
                "unknown component '{n}' (expected one of {})",
                NAMES.join(", ")
            );
        }
    }
    let base = load_config(args.config.as_deref())?;
    let kappas = if args.kappa.is_empty() {
        vec![base.kappa]
    } else {
        args.kappa.clone()
    };
    let sets = toggle_sets(&args.components);

    let data: Vec<(SequenceBundle, Vec<MotRow>)> = match (&args.det, &args.gt) {
        (Some(det), Some(gt)) => {
            vec![(
                load_sequence(det, args.emb.as_deref(), Components::default())?,
                read_gt(gt)?,
            )]
        }
        _ => (0..args.seeds)
            .into_par_iter()
            .map(|seed| {
                let g = generate(&args.scenario.build(seed));
                (g.detections, g.gt)
            })
            .collect(),
    };

    let header = [
        "kappa", "ONMS", "DDM", "TDM", "ADM", "BYTE", "MOTA", "IDF1", "IDSW", "FP", "FN",
    ];
    let mut rows = Vec::new();
    let mut csv = String::from("kappa,onms,ddm,tdm,adm,second,mota,idf1,idsw,fp,fn\n");
    for &kappa in &kappas {
        let cfg = TrackerConfig {
            kappa,
            ..base.clone()
        };
        cfg.validate()?;
        for &c in &sets {
            let t = score(&data, &cfg, c)?;
            let mota = t.mota()?;
            rows.push([
                format!("{kappa:.2}"),
                mark(c.onms),
                mark(c.ddm),
                mark(c.tdm),
                mark(c.adm),
                mark(c.second_stage),
                format!("{:.1}", 100.0 * mota),
                format!("{:.1}", 100.0 * t.idf1()),
                t.id_switches.to_string(),
                t.false_positives.to_string(),
                t.false_negatives.to_string(),
            ]);
            csv.push_str(&format!(
                "{kappa},{},{},{},{},{},{mota:.6},{:.6},{},{},{}\n",
                u8::from(c.onms),
                u8::from(c.ddm),
                u8::from(c.tdm),
                u8::from(c.adm),
                u8::from(c.second_stage),
                t.idf1(),
                t.id_switches,
                t.false_positives,
                t.false_negatives
            ));
        }
    }
    print!("{}", render_table(&header, &rows));
    if let Some(path) = &args.csv {
        write_atomic(path, &csv)?;
    }
    Ok(())
}
