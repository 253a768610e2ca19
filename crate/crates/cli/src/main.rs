use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use willmore::Variant;

#[derive(Parser)]
#[command(
    name = "willmore",
    version,
    about = "Willmore flow of closed planar curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write its artifacts.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a configuration key, e.g. `--set dt=1e-3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Run the expanding-circle convergence ladder.
    Converge {
        #[arg(long, value_enum, default_value = "linear")]
        scheme: Scheme,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// List the named experiments.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Linear,
    Nonlinear,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, sets } => {
            willmore_cli::cmd_run(config.as_deref(), &sets).map(|out| match &out.summary.error {
                None => {
                    println!("wrote {}", out.output_dir.display());
                    ExitCode::SUCCESS
                }
                Some(e) => {
                    eprintln!("error ({}): {}", e.kind, e.message);
                    ExitCode::FAILURE
                }
            })
        }
        Command::Converge {
            scheme,
            levels,
            output_dir,
        } => {
            let variant = match scheme {
                Scheme::Linear => Variant::Linear,
                Scheme::Nonlinear => Variant::Nonlinear,
            };
            willmore_cli::cmd_converge(variant, levels, output_dir.as_deref()).map(|v| {
                println!("verdict: {}", v.verdict);
                for f in &v.failures {
                    println!("  {f}");
                }
                ExitCode::SUCCESS
            })
        }
        Command::Presets => {
            for name in willmore::harness::PRESETS {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
