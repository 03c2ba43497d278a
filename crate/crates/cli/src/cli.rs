//! Command-line parsing and dispatch shared by every `olre` entry point.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;

/// Online and offline relative likelihood-ratio estimation experiments.
#[derive(Parser)]
#[command(name = "olre", version)]
struct Cli {
    /// Worker threads for trials (0 = one per CPU).
    #[arg(long, short = 'j', global = true, default_value_t = 0)]
    jobs: usize,

    /// Log progress to stderr (repeat for more detail).
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all methods and trials of a config file.
    Run { config: PathBuf },
    /// Cross-validate sigma and lambda on the warm-up pairs.
    Select { config: PathBuf },
    /// Plot an aggregate CSV as a log-log SVG.
    Plot { csv: PathBuf, svg: PathBuf },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                commands::EXIT_INVALID
            } else {
                commands::EXIT_OK
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();

    match &cli.command {
        Command::Run { config } => commands::cmd_run(config, cli.jobs),
        Command::Select { config } => commands::cmd_select(config),
        Command::Plot { csv, svg } => commands::cmd_plot(csv, svg),
    }
}
