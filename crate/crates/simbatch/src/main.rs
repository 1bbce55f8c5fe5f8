use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use simbatch::output::write_csv_file;
use simbatch::trace_io::verify_dir;
use simbatch::{load_config, run_experiment, run_preflib, ExperimentConfig, ExperimentOutput};

/// Monte Carlo experiments on iterative plurality voting under local dominance.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the grid described by a TOML config and writes CSV.
    Run {
        config: PathBuf,
        /// Overrides `output_path`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Runs the config's radius sweep on a PrefLib profile.
    Preflib {
        config: PathBuf,
        profile: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-checks every dumped trace in a directory.
    Verify { trace_dir: PathBuf },
}

fn finish(cfg: &ExperimentConfig, out: &ExperimentOutput, path: &PathBuf) -> anyhow::Result<ExitCode> {
    write_csv_file(cfg, out, path).with_context(|| format!("writing {}", path.display()))?;
    let aborted: Vec<_> = out.aborted().collect();
    for c in &aborted {
        eprintln!(
            "aborted cell {} (n={}, m={}, r={}): {}",
            c.cell.index,
            c.cell.n,
            c.cell.m,
            c.cell.r,
            c.aborted.as_deref().unwrap_or_default()
        );
    }
    eprintln!("wrote {} ({} cells, {} aborted)", path.display(), out.cells.len(), aborted.len());
    Ok(if aborted.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("starting worker pool")?;
    }
    match cli.command {
        Command::Run { config, output } => {
            let cfg = load_config(&config)?;
            let out = run_experiment(&cfg)?;
            finish(&cfg, &out, output.as_ref().unwrap_or(&cfg.output_path))
        }
        Command::Preflib { config, profile, output } => {
            let cfg = load_config(&config)?;
            let out = run_preflib(&cfg, &profile)?;
            finish(&cfg, &out, output.as_ref().unwrap_or(&cfg.output_path))
        }
        Command::Verify { trace_dir } => {
            let audits = verify_dir(&trace_dir)?;
            let mut bad = 0;
            let mut skipped = 0;
            for a in &audits {
                if let Some(why) = a.skipped {
                    skipped += 1;
                    log::info!("{}: invariants skipped ({why})", a.path.display());
                }
                if !a.is_clean() {
                    bad += 1;
                    println!("{}", a.path.display());
                    for p in &a.problems {
                        println!("  {p}");
                    }
                    for v in &a.violations {
                        println!("  {:?} time={:?} voter={:?} {}", v.kind, v.time, v.voter, v.detail);
                    }
                }
            }
            println!("{} traces, {} with findings, {} without invariant checks", audits.len(), bad, skipped);
            Ok(if bad == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
