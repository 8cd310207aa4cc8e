//! `dgp`: fit, benchmark and evaluate symbolic regression models.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{FitArgs, Method, SynthArgs};
use config::RunConfig;
use dgp_core::{DgpError, EngineConfig, SyntheticBenchmark};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dgp", version, about = "Differentiable genetic programming for symbolic regression")]
struct Cli {
    /// Suppress progress lines on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV file (75/25 split) and write a JSON artifact.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Target column (default: last column).
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides engine.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "dgp")]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run seeded trials on a synthetic benchmark.
    Synth {
        #[arg(long, value_parser = parse_bench)]
        bench: SyntheticBenchmark,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Noise level (overrides noise.level).
        #[arg(long, conflicts_with = "noise_sweep")]
        noise: Option<f64>,
        /// Run every level of the default noise grid.
        #[arg(long)]
        noise_sweep: bool,
        #[arg(long, value_enum, default_value = "dgp")]
        method: Method,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed of the first trial; trial i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print R2, RMSE, NRMSE and size of an expression on a CSV file.
    Eval {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target: Option<String>,
    },
    /// Print a complete configuration file.
    Config {
        #[arg(long, value_enum, default_value = "default")]
        preset: Preset,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Preset {
    Default,
    Synthetic,
    Desk,
}

fn parse_bench(s: &str) -> Result<SyntheticBenchmark, String> {
    s.parse().map_err(|e: DgpError| e.to_string())
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("DGP_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow::anyhow!("DGP_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Fit {
            data,
            target,
            config,
            seed,
            method,
            out,
        } => commands::fit(FitArgs {
            data,
            target,
            config: RunConfig::load(config.as_deref())?.with_seed(seed),
            method,
            out,
            quiet: cli.quiet,
        }),
        Command::Synth {
            bench,
            trials,
            noise,
            noise_sweep,
            method,
            config,
            seed,
            out,
        } => commands::synth(SynthArgs {
            bench,
            trials,
            noise,
            noise_sweep,
            method,
            config: RunConfig::load(config.as_deref())?.with_seed(seed),
            out,
            quiet: cli.quiet,
        }),
        Command::Eval { expr, data, target } => commands::eval(&expr, &data, target.as_deref()),
        Command::Config { preset } => {
            let e = match preset {
                Preset::Default => EngineConfig::default(),
                Preset::Synthetic => EngineConfig::synthetic(),
                Preset::Desk => EngineConfig::desk(),
            };
            print!("{}", toml::to_string(&RunConfig::from_engine(e))?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let degenerate = e
                .downcast_ref::<DgpError>()
                .is_some_and(DgpError::is_degenerate_target);
            ExitCode::from(if degenerate { 2 } else { 1 })
        }
    }
}
