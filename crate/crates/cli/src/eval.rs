use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use deconfuse_core::io::{read_gt, read_mot, write_atomic};
use deconfuse_core::metrics::{check_frame_range, evaluate, EvalReport};

#[derive(Args)]
pub struct EvalArgs {
    /// Result file(s) in MOT format.
    #[arg(long, required = true, num_args = 1..)]
    results: Vec<PathBuf>,
    /// Ground-truth file(s), one per result file, in the same order.
    #[arg(long, required = true, num_args = 1..)]
    gt: Vec<PathBuf>,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> anyhow::Result<()> {
    if args.results.len() != args.gt.len() {
        bail!(
            "{} result files given for {} ground-truth files",
            args.results.len(),
            args.gt.len()
        );
    }
    let mut report = EvalReport::default();
    for (res, gt) in args.results.iter().zip(&args.gt) {
        let preds = read_mot(res)?;
        let truth = read_gt(gt)?;
        check_frame_range(&truth, &preds)
            .with_context(|| format!("{} vs {}", res.display(), gt.display()))?;
        let name = res
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        report.push(name, evaluate(&truth, &preds));
    }
    print!("{}", report.to_table());
    if let Some(path) = &args.csv {
        write_atomic(path, &report.to_csv())?;
    }
    Ok(())
}
