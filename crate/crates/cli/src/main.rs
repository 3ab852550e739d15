use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hvi_core::harness::{exit_code_for, CommandOutput, Harness, Overrides};
use hvi_core::par::Execution;
use hvi_core::Result;

/// Solvers and diagnostics for hierarchical variational inequalities.
///
/// Exit codes: 0 success, 1 check violation, 2 divergence, 3 config or I/O error.
#[derive(Parser)]
#[command(name = "hvi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write a trace plus a report.
    Run(Common),
    /// Run the solver for several δ values and fit gap rates.
    Sweep(Common),
    /// Run OEG, Tseng and Korpelevich on the same schedule.
    Compare(Common),
    /// Randomized invariant checks on the problem zoo.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    config: PathBuf,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration budget (overrides `[solver] iterations`).
    #[arg(long)]
    k: Option<usize>,
    /// Regularization exponent(s); several values define a sweep.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    delta: Vec<f64>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Run everything on one thread.
    #[arg(long)]
    sequential: bool,
}

fn execute(cmd: &Command) -> Result<CommandOutput> {
    let (Command::Run(c) | Command::Sweep(c) | Command::Compare(c) | Command::Check(c)) = cmd;
    let overrides = Overrides {
        // Relative to the working directory, not the config file.
        out_dir: c
            .out
            .as_ref()
            .map(|p| std::path::absolute(p).unwrap_or_else(|_| p.clone())),
        iterations: c.k,
        deltas: c.delta.clone(),
        seed: c.seed,
    };
    let exec = if c.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let h = Harness::from_file(&c.config, &overrides)?.with_execution(exec);
    match cmd {
        Command::Run(_) => h.cmd_run(),
        Command::Sweep(_) => h.cmd_sweep(),
        Command::Compare(_) => h.cmd_compare(),
        Command::Check(_) => h.cmd_check(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HVI_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            for c in out.report.failed_checks() {
                eprintln!(
                    "FAILED {} on {}: {} of {} violated",
                    c.name, c.target, c.violations, c.checked
                );
            }
            if let Some(cmp) = &out.report.compare {
                if !cmp.eval_counts_ok {
                    eprintln!("FAILED evaluation counts differ from the nominal per-iteration cost");
                }
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("hvi: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
