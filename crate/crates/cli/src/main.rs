//! Command-line front end for the correlation-study pipeline.
//!
//! Exit codes form a stable contract: 0 on success, 1 on input or config
//! errors, 2 when analysis completed but a control check failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eventlens_core::pipeline::{
    cmd_analyze, cmd_ingest, cmd_run, ExecOptions, Overrides, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "eventlens",
    version,
    about = "Correlates search-interest trends with stock prices around per-company event dates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read or fetch the raw sources, validate, merge, and write snapshots
    Ingest(CommonArgs),
    /// Compute correlation reports and scatter plots from existing snapshots
    Analyze(CommonArgs),
    /// Ingest then analyze in one go
    Run(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory; overrides the config's output_dir and EVENTLENS_OUT
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Forbid network access; remote price sources need a local fallback
    #[arg(long)]
    offline: bool,

    /// Seed for snapshot verification sampling; overrides the config
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

const USAGE_HINT: &str =
    "usage: eventlens <ingest|analyze|run> --config <PATH> [--out <DIR>] [--offline] [--seed <N>]";

fn main() -> ExitCode {
    ExitCode::from(run())
}

fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };

    let args = match &cli.command {
        Command::Ingest(args) | Command::Analyze(args) | Command::Run(args) => args,
    };

    let config = match RunConfig::load(&args.config) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("[error] {err}");
            eprintln!("{USAGE_HINT}");
            return 1;
        }
    };
    let overrides = Overrides {
        out: args.out.clone(),
        env_out: std::env::var_os("EVENTLENS_OUT").map(PathBuf::from),
        offline: args.offline,
        seed: args.seed,
    };
    let options = match ExecOptions::resolve(&config, &overrides) {
        Ok(options) => options,
        Err(err) => {
            eprintln!("[error] {err}");
            eprintln!("{USAGE_HINT}");
            return 1;
        }
    };

    let outcome = match &cli.command {
        Command::Ingest(_) => cmd_ingest(&config, &options).map(|_| false),
        Command::Analyze(_) => cmd_analyze(&config, &options).map(|s| s.control_failed),
        Command::Run(_) => cmd_run(&config, &options).map(|(_, analyze)| analyze.control_failed),
    };

    match outcome {
        Ok(control_failed) => {
            if control_failed {
                2
            } else {
                0
            }
        }
        Err(err) => {
            eprintln!("[error] {err}");
            1
        }
    }
}
