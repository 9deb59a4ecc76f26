mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::commands::{Failure, Options};
use crate::config::Experiment;

#[derive(Parser)]
#[command(
    name = "convwave",
    version,
    about = "Nonlocal wave equation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// Experiment configuration (TOML). Defaults apply to anything omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel runs.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Sobolev order for norms, overriding `run.s`.
    #[arg(long, global = true, value_name = "ORDER")]
    s: Option<f64>,
    /// Suppress summaries on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// List kernels with symbols, moments and matching order against dirac.
    Kernels {
        /// Kernel identifiers such as `bbm` or `fractional:gamma=0.75`.
        ids: Vec<String>,
    },
    /// Integrate one kernel from the configured initial data.
    Simulate,
    /// Run the two `[compare]` kernels and record their H^s distance.
    Compare,
    /// Fit the decay rate of the distance over the `[sweep]` delta list.
    Sweep,
    /// Sweep every `[suite]` kernel against dirac.
    Suite,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = cli.global;
    if let Some(n) = g.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut exp = match &g.config {
        Some(path) => Experiment::load(path)?,
        None => Experiment::default(),
    };
    if let Some(s) = g.s {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Failure::Usage(format!("--s must be >= 0, got {s}")));
        }
        exp.run.s = s;
    }
    let opts = Options {
        out: g.out,
        quiet: g.quiet,
    };
    match cli.command {
        Command::Kernels { ids } => commands::kernels(&ids),
        Command::Simulate => commands::simulate(&exp, &opts),
        Command::Compare => commands::compare(&exp, &opts),
        Command::Sweep => commands::sweep(&exp, &opts),
        Command::Suite => commands::suite(&exp, &opts),
    }
}
