use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sce_cli::{load, run, CliError, CliResult, Scenario};

#[derive(Parser)]
#[command(name = "sce", version, about = "Semiclassical Einstein equation scenarios on flat FLRW")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write CSV, JSON sidecars and report.json.
    Run {
        config: PathBuf,
        /// Output directory (beats output.dir in the file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-path override, e.g. physics.kappa=2 (repeatable).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the scenario names.
    ListScenarios,
    /// Check a config and print it with every default filled in.
    Validate {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SCE_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("SCE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))
}

fn main_inner(cli: Cli) -> CliResult<bool> {
    init_threads()?;
    match cli.command {
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<16} {}", s.name(), s.summary());
            }
            Ok(true)
        }
        Command::Validate { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            println!("{}", serde_json::to_string_pretty(&cfg.to_json()).expect("config serializes"));
            Ok(true)
        }
        Command::Run { config, out, overrides } => {
            let mut cfg = load(&config, &overrides)?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            let report = run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if let Some(h) = &report.halt {
                eprintln!("numerical halt: {h}");
            }
            Ok(report.halt.is_none())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
