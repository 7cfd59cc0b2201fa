use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use batchflow::cli::{self, RunArgs, SweepArgs};

#[derive(Parser)]
#[command(
    name = "batchflow",
    version,
    about = "Tick-scanned batch conversion and buffering simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace and summary.
    Run {
        config: PathBuf,
        /// Ticks to service (defaults to the config's max_ticks).
        #[arg(long)]
        ticks: Option<u64>,
        /// Trace CSV path (defaults to the config's trace entry).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Summary CSV path.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Override an initial value, `object.SECTION=value`. Repeatable.
        #[arg(long = "set", value_name = "OBJ.SEC=VALUE")]
        set: Vec<String>,
    },
    /// Run one point per value of a SETTING section.
    Sweep {
        config: PathBuf,
        /// `object.SECTION` to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long)]
        ticks: Option<u64>,
        /// Summary CSV path (stdout if omitted).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Write each point's trace into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Check conservation, determinism and cycle structure.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                cli::EXIT_USAGE
            } else {
                cli::EXIT_OK
            };
            return ExitCode::from(code as u8);
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match cli.command {
        Command::Run {
            config,
            ticks,
            trace,
            summary,
            set,
        } => cli::cmd_run(
            &RunArgs {
                config,
                ticks,
                trace,
                summary,
                set,
            },
            &mut out,
            &mut err,
        ),
        Command::Sweep {
            config,
            param,
            values,
            ticks,
            summary,
            trace_dir,
        } => cli::cmd_sweep(
            &SweepArgs {
                config,
                param,
                values,
                ticks,
                summary,
                trace_dir,
            },
            &mut out,
            &mut err,
        ),
        Command::Validate { config } => cli::cmd_validate(&config, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
