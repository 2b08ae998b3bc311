use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rationing::Policy;
use rationing_cli::commands::{self, SimOverrides};
use rationing_cli::config::{parse_policy, Grid, RunConfig, SweepKind};
use rationing_cli::output::{Format, Outcome};
use rationing_cli::reproduce::{reproduce, Target};
use rationing_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "rationing", version)]
#[command(about = "Stationary analysis, sensitivity and optimal rationing for a two-class stock-rationing queue")]
struct Cli {
    /// JSON run configuration (parameters, policy, sweep, simulation)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Enumerate all 2^K policies as an oracle (up to the enumeration cap)
    #[arg(long, global = true)]
    oracle: bool,

    /// Seed for the simulation random streams
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary law, profit, potential, realization factors and penalty roots of one policy
    Solve {
        /// Decision vector for positions 1..K, e.g. 0,1,1 or 011
        #[arg(long, value_parser = parse_policy)]
        policy: Option<Policy>,
        /// Value of the free constant at state 0
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        im: f64,
        /// Displacement added to every potential entry
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        xi: f64,
    },
    /// Globally optimal rationing policy
    Optimize,
    /// Profit over a grid of thresholds, arrival rates or penalties
    Sweep {
        #[arg(long, value_enum)]
        kind: Option<SweepKind>,
        /// start:stop:count
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<Grid>,
        /// Explicit grid values, comma separated
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Vec<f64>,
        /// Evaluate this policy instead of the best static one
        #[arg(long, value_parser = parse_policy)]
        policy: Option<Policy>,
    },
    /// Recompute a published experiment and compare with its printed values
    Reproduce {
        #[arg(value_enum)]
        target: Target,
    },
    /// Monte Carlo estimate of the long-run average profit
    Simulate {
        #[arg(long, value_parser = parse_policy)]
        policy: Option<Policy>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Fraction of each horizon discarded as warm-up
        #[arg(long)]
        warmup: Option<f64>,
    },
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Err(CliError::usage("this command needs --config <path.json>")),
    }
}

fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Solve { ref policy, im, xi } => commands::solve(&load_config(&cli)?, policy.clone(), im, xi),
        Command::Optimize => commands::optimize(&load_config(&cli)?, cli.oracle),
        Command::Sweep { kind, grid, ref values, ref policy } => {
            commands::sweep(&load_config(&cli)?, kind, grid, values.clone(), policy.clone())
        }
        Command::Reproduce { target } => Ok(reproduce(target)?.into_outcome()),
        Command::Simulate { ref policy, horizon, replications, warmup } => {
            let ov = SimOverrides { horizon, replications, seed: cli.seed, warmup_fraction: warmup };
            commands::simulate(&load_config(&cli)?, policy.clone(), &ov)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, out) = (cli.format, cli.out.clone());
    match run(cli).and_then(|o| o.emit(format, out.as_deref()).map(|()| o.passed)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("rationing: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
