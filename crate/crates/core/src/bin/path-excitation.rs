use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use path_excitation::cli::{apply_overrides, error_json, exit_code_for, run_subcommand, Subcommand};
use path_excitation::config::{parse_config, RunConfig};
use path_excitation::Error;

/// n-slit interference fields, trajectories and sum rules.
#[derive(Debug, Parser)]
#[command(name = "path-excitation", version)]
struct Args {
    /// One of: field, trajectories, sorkin, verify, packet.
    subcommand: String,

    /// JSON configuration file; defaults to the symmetric two-slit setup.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,

    /// Overrides `trajectories.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("PATH_EXCITATION_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Validation(format!("PATH_EXCITATION_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

fn run(args: Args) -> Result<i32, Error> {
    init_threads()?;
    let cmd: Subcommand = args.subcommand.parse()?;
    let config = match &args.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let config = apply_overrides(config, args.seed);
    let outcome = run_subcommand(cmd, &config, &args.out_dir)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
