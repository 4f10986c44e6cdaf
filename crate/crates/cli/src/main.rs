//! `deconfuse`: run the tracker, score results, generate synthetic scenes
//! and sweep ablations.

mod ablate;
mod eval;
mod track;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deconfuse_core::synth::{generate, ScenarioKind};
use deconfuse_core::Components;

#[derive(Parser)]
#[command(name = "deconfuse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track detections and write MOT result files.
    Track(track::TrackArgs),
    /// Score result files against ground truth.
    Eval(eval::EvalArgs),
    /// Write a synthetic scene (gt.txt, det.txt, emb.csv).
    Synth(SynthArgs),
    /// Compare confusion factors and component subsets.
    Ablate(ablate::AblateArgs),
}

/// Pipeline stages switched off from the command line.
#[derive(Args, Debug, Clone, Copy)]
pub struct Toggles {
    /// Single-threshold NMS instead of occlusion-aware NMS.
    #[arg(long)]
    no_onms: bool,
    #[arg(long)]
    no_ddm: bool,
    #[arg(long)]
    no_tdm: bool,
    #[arg(long)]
    no_adm: bool,
    /// Skip the association of unreliable detections.
    #[arg(long)]
    no_second_stage: bool,
    /// Shorthand for --no-onms --no-ddm --no-tdm --no-adm.
    #[arg(long)]
    baseline: bool,
}

impl Toggles {
    pub fn components(&self) -> Components {
        let base = if self.baseline {
            Components::baseline()
        } else {
            Components::default()
        };
        Components {
            onms: base.onms && !self.no_onms,
            ddm: base.ddm && !self.no_ddm,
            tdm: base.tdm && !self.no_tdm,
            adm: base.adm && !self.no_adm,
            second_stage: base.second_stage && !self.no_second_stage,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// crossing, occlusion or fragmentation.
    kind: ScenarioKind,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let scenario = args.kind.build(args.seed);
    scenario.validate()?;
    let g = generate(&scenario);
    g.write_to(&args.out_dir)?;
    println!(
        "{} seed {}: {} frames, {} agents, {} ground-truth boxes, {} detections",
        args.kind,
        args.seed,
        scenario.frames,
        scenario.agents.len(),
        g.gt.len(),
        g.detections.detection_count()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DECONFUSE_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Track(a) => track::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Ablate(a) => ablate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
