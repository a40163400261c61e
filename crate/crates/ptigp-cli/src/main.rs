//! `ptigp` — geometric phases and thermal interference phases of
//! finite-dimensional PT-symmetric systems.
//!
//! Every subcommand reads one optional TOML configuration file; any value can
//! be overridden on the command line either as `--set section.key=value` or
//! with the shorthand `--section.key=value`.
//!
//! Exit codes: 0 success, 2 physics-domain failure (broken PT phase,
//! degeneracy, adiabaticity breakdown, residuals out of tolerance),
//! 3 usage or configuration error.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "ptigp",
    version,
    about = "Geometric phases and thermal interference phases of PT-symmetric systems"
)]
struct Cli {
    /// Worker threads for grid scans (default: machine parallelism;
    /// also settable via the PTIGP_THREADS environment variable).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    /// TOML configuration file; built-in defaults apply when omitted.
    config: Option<String>,

    /// Override one configuration value (repeatable), e.g.
    /// --set scan.beta_max=8 or the shorthand --scan.beta_max=8.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the configured model along the configured path
    Check(JobArgs),
    /// Per-level geometric phases of the configured loop
    Phases(JobArgs),
    /// Thermal interference phase over the theta x beta grid
    #[command(name = "igp-scan")]
    IgpScan(JobArgs),
    /// Locate finite-temperature geometric phase transitions
    Critical(JobArgs),
    /// Direct-evolution oracle table across ramp factors
    Oracle(JobArgs),
    /// One gated direct-evolution run
    Evolve(JobArgs),
}

/// Rewrites the `--section.key=value` shorthand into `--set section.key=value`
/// so every configuration field is addressable as its own flag.
fn preprocess(args: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut literal = false;
    for arg in args {
        if literal || arg == "--" {
            literal = literal || arg == "--";
            out.push(arg);
            continue;
        }
        let rewritten = arg.strip_prefix("--").and_then(|body| {
            let (key, _) = body.split_once('=')?;
            key.contains('.').then(|| body.to_string())
        });
        match rewritten {
            Some(body) => {
                out.push("--set".to_string());
                out.push(body);
            }
            None => out.push(arg),
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn init_threads(requested: Option<usize>) {
    if let Some(n) = requested {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_requested: Option<usize>) {
    // Sequential build: scans run on one thread regardless of the request.
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    type CommandFn = fn(&RunConfig) -> Result<i32, CliError>;
    let (job, command): (&JobArgs, CommandFn) = match &cli.command {
        Command::Check(j) => (j, commands::cmd_check),
        Command::Phases(j) => (j, commands::cmd_phases),
        Command::IgpScan(j) => (j, commands::cmd_igp_scan),
        Command::Critical(j) => (j, commands::cmd_critical),
        Command::Oracle(j) => (j, commands::cmd_oracle),
        Command::Evolve(j) => (j, commands::cmd_evolve),
    };
    let cfg = config::load(job.config.as_deref(), &job.set)?;
    command(&cfg)
}

fn main() {
    let args = preprocess(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            std::process::exit(code);
        }
    };

    let threads = cli.threads.or_else(|| {
        std::env::var("PTIGP_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    init_threads(threads);

    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
