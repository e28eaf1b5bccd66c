use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdnls::runner::{replay, report, run_experiment};
use fdnls::{ExperimentConfig, LabError, Summary};

#[derive(Parser)]
#[command(name = "fdnls", version, about = "Spectral Galerkin lab for damped-driven NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rerun a recorded experiment and compare its outputs byte for byte.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Aggregate the summaries of every run under a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn print_summary(s: &Summary) {
    for c in &s.checks {
        let status = match (c.pass, c.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        let est = c.estimate.map(|x| format!(" estimate={x:e}")).unwrap_or_default();
        let tgt = c.target.map(|x| format!(" target={x:e}")).unwrap_or_default();
        println!("{status} {}{est}{tgt} {}", c.check, c.note);
    }
    for w in &s.warnings {
        println!("warning: {w}");
    }
}

fn main_inner(cli: Cli) -> Result<i32, LabError> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let s = run_experiment(&cfg, &out, workers)?;
            print_summary(&s);
            Ok(s.exit_code())
        }
        Command::Replay { manifest, out, workers } => {
            let r = replay(&manifest, &out, workers)?;
            print_summary(&r.summary);
            for m in &r.mismatches {
                println!("MISMATCH {m}");
            }
            Ok(if r.identical() { r.summary.exit_code() } else { 1 })
        }
        Command::Report { dir } => {
            let r = report(&dir)?;
            for run in &r.runs {
                let status = if run.summary.passed() { "PASS" } else { "FAIL" };
                println!("{status} {} ({})", run.dir.display(), run.summary.kind);
            }
            Ok(r.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
