use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcsim::cli::{self, Overrides, SweepParameter};
use dcsim::config::parse_config;
use dcsim::correlation::Protocol;
use dcsim::{Error, Result};

/// Delayed-choice EPR double-slit simulator.
#[derive(Parser)]
#[command(name = "dcsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Bob's pattern for one of Alice's settings.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["position", "momentum"])]
        protocol: Option<String>,
    },
    /// Brute-force no-signaling check.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Vary one parameter and tabulate visibilities and flux ratio.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// phi0_deg, alpha, slit_separation, screen_distance or source_half_separation
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 8)]
        steps: usize,
    },
    /// Print regime diagnostics; exits 3 if a run would be refused.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid: Option<usize>,
}

fn load(common: &Common, protocol: Option<Protocol>) -> Result<dcsim::config::RunConfig> {
    let base = parse_config(&common.config)?;
    cli::apply_overrides(
        &base,
        &Overrides {
            protocol,
            out: common.out.clone(),
            seed: common.seed,
            grid: common.grid,
        },
    )
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run { common, protocol } => {
            let protocol = protocol.map(|p| p.parse()).transpose()?;
            let config = load(&common, protocol)?;
            for path in cli::command_run(&config)? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Oracle { common } => {
            let config = load(&common, None)?;
            let (path, pass) = cli::command_oracle(&config)?;
            println!("{} (complete marginalization pass = {pass})", path.display());
            Ok(0)
        }
        Command::Sweep {
            common,
            param,
            from,
            to,
            steps,
        } => {
            let config = load(&common, None)?;
            let param: SweepParameter = param
                .parse()
                .map_err(|e: Error| Error::Config { line: None, message: e.to_string() })?;
            let values = cli::sweep_values(from, to, steps)?;
            println!("{}", cli::command_sweep(&config, param, &values)?.display());
            Ok(0)
        }
        Command::Validate { config } => {
            let config = parse_config(&config)?;
            let (report, passed) = cli::command_validate(&config)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if passed { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match execute(args.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", cli::error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
