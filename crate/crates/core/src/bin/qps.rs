use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use qps_core::report::{run, RunError};

/// Finite-volume experiments on quasi-periodic operators and their duals.
#[derive(Parser, Debug)]
#[command(name = "qps", version)]
struct Cli {
    /// spectrum, suitability, multiscale, duality, extension, ac-estimate or all
    subcommand: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides QPS_OUT_DIR and the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return fail(RunError::Config(e.to_string().trim().to_string())),
    };
    match run(&cli.config, &cli.subcommand, cli.out.as_deref()) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
