use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use blowup_cli::{emit_plot_data, run_pipeline, write_bundle, RunConfig};

#[derive(Parser)]
#[command(name = "blowup", version, about = "Radial semilinear wave blow-up laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write its report bundle.
    Run {
        config: PathBuf,
        /// Write the bundle here instead of the configured directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write plot-ready data files for an existing bundle.
    Plot { bundle: PathBuf },
    /// Parse and check a configuration without running it.
    Validate { config: PathBuf },
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { config } => match RunConfig::load(&config) {
            Ok(c) => {
                println!("{}: ok ({} on {} nodes)", config.display(), c.initial.name(), c.grid.nodes);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(CONFIG_ERROR)
            }
        },
        Command::Run { config, out } => {
            let config = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            match run(&config, out) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(RUNTIME_ERROR),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
        }
        Command::Plot { bundle } => match emit_plot_data(&bundle) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(RUNTIME_ERROR)
            }
        },
    }
}

/// Runs and writes the bundle; `Ok(false)` when a run-level stage failed.
fn run(config: &RunConfig, out: Option<PathBuf>) -> anyhow::Result<bool> {
    let start = Instant::now();
    let bundle = run_pipeline(config)?;
    let dir = out.unwrap_or_else(|| config.output_dir());
    write_bundle(&bundle, &dir, Some(start.elapsed().as_secs_f64()))?;
    let s = &bundle.summary;
    if !s.blowup {
        println!("no blow-up recorded");
    }
    for p in &bundle.probes {
        let k = p.classification.k.map_or("-".to_string(), |k| k.to_string());
        println!("r0 = {:.4}  {:?}  k = {k}  ({})", p.r0, p.verdict(), p.classification.reason);
        for e in &p.errors {
            println!("    {e}");
        }
    }
    for e in &s.errors {
        eprintln!("error: {e}");
    }
    println!("bundle written to {}", dir.display());
    Ok(s.errors.is_empty())
}
