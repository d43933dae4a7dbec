use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use crackinit::config::ExperimentConfig;
use crackinit::runner::{run, Command, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Solve,
    DualBound,
    ReleaseCurve,
    Classify,
    Evolve,
    Poincare,
    MeyersVerify,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Command {
        match s {
            Sub::Solve => Command::Solve,
            Sub::DualBound => Command::DualBound,
            Sub::ReleaseCurve => Command::ReleaseCurve,
            Sub::Classify => Command::Classify,
            Sub::Evolve => Command::Evolve,
            Sub::Poincare => Command::Poincare,
            Sub::MeyersVerify => Command::MeyersVerify,
        }
    }
}

/// Anti-plane fracture experiments driven by a TOML config.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<crackinit::Error>().map_or(1, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(&cli.config)?;
    let opts = RunOptions { workers: cli.workers, out: cli.out.clone(), seed: cli.seed };
    let summary = run(cli.command.into(), &cfg, &opts)
        .with_context(|| format!("running {}", Command::from(cli.command).name()))?;
    for line in &summary.lines {
        println!("{line}");
    }
    Ok(())
}
