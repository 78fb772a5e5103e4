use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use freqbin_cli::{execute, fit_csv, list_experiments, parse_manifest, render, write_artifacts};

#[derive(Parser)]
#[command(name = "freqbin", version, about = "Frequency-bin photonic processor simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON manifest.
    Run {
        manifest: PathBuf,
        /// Overrides the manifest's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to the manifest, then FREQBIN_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run settings the CZ gate is not designed for.
        #[arg(long)]
        allow_nonstandard: bool,
        #[arg(long, env = "FREQBIN_OUT", hide = true)]
        default_out: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
    /// Fit the double-resonator model to a `detuning_ghz,transmission` CSV.
    Fit { spectrum: PathBuf },
}

fn run(
    manifest: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    allow_nonstandard: bool,
    default_out: Option<PathBuf>,
) -> Result<()> {
    let text = fs::read_to_string(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let mut m = parse_manifest(&text, allow_nonstandard)?;
    if let Some(s) = seed {
        m.seed = s;
    }
    let dir = out.or(m.output_dir.clone()).or(default_out).unwrap_or_else(|| PathBuf::from("freqbin-out"));
    let artifacts = render(execute(&m, allow_nonstandard)?)?;
    write_artifacts(&artifacts, &dir)?;
    print!("{}", artifacts.report);
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { manifest, seed, out, allow_nonstandard, default_out } => {
            run(manifest, seed, out, allow_nonstandard, default_out)
        }
        Command::List => {
            print!("{}", list_experiments());
            Ok(())
        }
        Command::Fit { spectrum } => fit_csv(&spectrum).and_then(|f| {
            println!("{}", serde_json::to_string_pretty(&f)?);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
