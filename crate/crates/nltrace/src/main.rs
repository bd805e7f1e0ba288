use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nltrace::cli::{run_command, RunOverrides};

/// Whitney-cube extension operators and nonlocal trace-space seminorms.
#[derive(Parser)]
#[command(name = "nltrace", version, about)]
struct Args {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "nltrace.toml")]
    config: PathBuf,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Multiply every sampling budget by this factor.
    #[arg(long, global = true, default_value_t = 1.0)]
    budget_scale: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Whitney cubes, reflected cubes, thickness audit, plumpness probe.
    Decompose,
    /// Build the extension of a battery function or grid data; export field,
    /// profile, coefficients and a boundary trace probe.
    Extend,
    /// Seminorm estimates for the battery over the (s, p) grid.
    Seminorm,
    /// Run every inequality check; exit 2 on violations, 3 when budgets were
    /// too small for a conclusive verdict.
    Verify,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("nltrace: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let overrides = RunOverrides {
        seed: args.seed,
        budget_scale: args.budget_scale,
        threads: args.threads,
    };
    let command = match args.command {
        Command::Decompose => "decompose",
        Command::Extend => "extend",
        Command::Seminorm => "seminorm",
        Command::Verify => "verify",
    };
    match run_command(command, &args.config, &args.out, &overrides) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("nltrace: {e}");
            ExitCode::from(1)
        }
    }
}
