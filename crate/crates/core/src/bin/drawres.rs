use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use drawres::pipeline::{run, RunConfig, Subcommand};
use drawres::sampling::CoverageMode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Synth,
    Ingest,
    Features,
    Train,
    Evaluate,
    Flag,
    SamplePlan,
    Pipeline,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Eq19,
    PaperExample,
}

/// Draw-resistance prediction pipeline.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `sampling.mode`.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building thread pool")?;
    }
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(m) = cli.mode {
        cfg.sampling.mode = match m {
            Mode::Eq19 => CoverageMode::Eq19,
            Mode::PaperExample => CoverageMode::PaperExample,
        };
    }
    let cmd = match cli.command {
        Command::Synth => Subcommand::Synth,
        Command::Ingest => Subcommand::Ingest,
        Command::Features => Subcommand::Features,
        Command::Train => Subcommand::Train,
        Command::Evaluate => Subcommand::Evaluate,
        Command::Flag => Subcommand::Flag,
        Command::SamplePlan => Subcommand::SamplePlan,
        Command::Pipeline => Subcommand::Pipeline,
    };
    let outcome = run(cmd, &cfg)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("wrote {} artifacts under {}", outcome.artifacts.len(), cfg.out_dir.display());
    Ok(())
}
