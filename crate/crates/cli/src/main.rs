use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nikodym_cli::config::LoadedConfig;
use nikodym_cli::presets::render_table;
use nikodym_cli::{list_presets, resolve, run, Overrides};

#[derive(Parser)]
#[command(
    name = "nikodym",
    version,
    about = "Run Nikodym maximal function experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset experiment.
    Run(Box<RunArgs>),
    /// List the preset experiments whose names contain FILTER.
    ListPresets { filter: Option<String> },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    preset: Option<String>,
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    curve: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// A single δ, e.g. `2^-7`.
    #[arg(long, conflicts_with = "deltas")]
    delta: Option<String>,
    /// A δ grid: `2^-3..2^-7` or a comma list.
    #[arg(long)]
    deltas: Option<String>,
    /// A λ value or grid: `256`, `2^4..2^12`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    slack: Option<f64>,
}

fn run_command(args: RunArgs) -> ExitCode {
    let file = match args.config.as_deref().map(LoadedConfig::load).transpose() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let flags = Overrides {
        preset: args.preset,
        curve: args.curve,
        d: args.d,
        deltas: args.deltas.or(args.delta),
        lambdas: args.lambda,
        seed: args.seed,
        out: args.out,
        workers: args.workers,
        slack: args.slack,
    };
    let (cfg, exec) = match resolve(file.as_ref(), &flags) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg, &exec) {
        Ok(outcome) => {
            println!("{}", outcome.dir.display());
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("check failed: {}", outcome.check);
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(*args),
        Command::ListPresets { filter } => {
            print!("{}", render_table(&list_presets(filter.as_deref())));
            ExitCode::SUCCESS
        }
    }
}
