use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use flatwave::cli::{self, ExperimentConfig, Verdict, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "flatwave", version, about = "Oscillatory-integral, Orlicz-norm and maximal-average experiments")]
struct Args {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for reports and CSV side files
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for pseudo-random test batteries
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config
    Run { config: PathBuf },
    /// Run every config listed in a manifest
    Suite { manifest: PathBuf },
}

fn real_main(args: Args) -> anyhow::Result<bool> {
    if let Some(w) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .context("configuring worker pool")?;
    }
    match args.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let report = cli::run(&cfg, args.out.as_deref(), args.seed)?;
            if args.out.is_none() && cfg.output.is_none() {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{}: {:?} ({:.2} s)", report.name, report.verdict, report.wall_time_s);
            }
            Ok(report.verdict == Verdict::Pass)
        }
        Command::Suite { manifest } => {
            let configs = cli::load_manifest(&manifest).with_context(|| format!("loading {}", manifest.display()))?;
            let summary = cli::suite(&configs, args.out.as_deref(), args.seed);
            print!("{}", summary.table());
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            }
            Ok(summary.failures() == 0)
        }
    }
}

fn main() -> ExitCode {
    match real_main(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
