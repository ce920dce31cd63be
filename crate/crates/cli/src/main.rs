use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mnp_core::cli::{self, config::Overrides, CommandReport};

/// Bayesian multinomial probit fitting by marginal data augmentation.
#[derive(Parser)]
#[command(name = "mnp", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic choice dataset.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a sampler on a dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sampler: 1.1, 1.2, 1.3, 2.1, 2.2, 3.1 or 3.2.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Summaries, autocorrelations and effective sample sizes of a draws file.
    Diagnose {
        #[arg(long)]
        draws: PathBuf,
        /// Fit manifest with the chain timing (default: manifest.json next to the draws).
        #[arg(long)]
        fit_manifest: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// KS statistics and quantile pairs between two draws files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Rerun the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn print_report(report: &CommandReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for o in &report.manifest.outputs {
        println!("wrote {}", o.path.display());
    }
    println!("wrote {}", report.manifest_path.display());
}

fn run(args: Args) -> mnp_core::Result<()> {
    let threads = cli::default_threads();
    match args.command {
        Command::Simulate { config, seed, output } => {
            print_report(&cli::simulate(config.as_deref(), seed, &output)?);
        }
        Command::Fit {
            data,
            config,
            seed,
            variant,
            iterations,
            burn_in,
            thin,
            output,
        } => {
            let overrides = Overrides {
                seed,
                variant,
                iterations,
                burn_in,
                thin,
            };
            let report = cli::fit(&data, config.as_deref(), overrides, &output, threads)?;
            for c in &report.manifest.chains {
                println!(
                    "chain {}: {} draws kept, {} violations, acceptance {:.3}, {:.2}s",
                    c.chain, c.retained, c.total_violations, c.acceptance_rate, c.wall_clock_seconds
                );
            }
            print_report(&report);
        }
        Command::Diagnose {
            draws,
            fit_manifest,
            output,
        } => {
            print_report(&cli::diagnose(&draws, fit_manifest.as_deref(), &output)?);
        }
        Command::Compare { a, b, output } => {
            print_report(&cli::compare(&a, &b, &output)?);
        }
        Command::Replay { manifest, output } => {
            let replay = cli::replay(&manifest, &output, threads)?;
            print_report(&replay.report);
            if replay.mismatched.is_empty() {
                println!("all outputs match the original run");
            } else {
                eprintln!(
                    "warning: outputs differ from the original run: {}",
                    replay.mismatched.join(", ")
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
