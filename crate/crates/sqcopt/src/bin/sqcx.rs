use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sqcopt::harness::{exit_code_for, run_from_config, Command, RunConfig};

#[derive(Parser)]
#[command(name = "sqcx", version, about = "Run verifiers and solvers from a TOML config")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for traces and summaries.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Sampled property checks on the configured problem.
    Verify,
    /// Run a minimization method.
    Minimize,
    /// Run an equilibrium-problem solver.
    SolveEp,
    /// Integrate a gradient flow.
    Dynamics,
    /// Inertia/relaxation grid against the proximal point baseline.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Cmd::Verify => Command::Verify,
        Cmd::Minimize => Command::Minimize,
        Cmd::SolveEp => Command::SolveEp,
        Cmd::Dynamics => Command::Dynamics,
        Cmd::Sweep => Command::Sweep,
    };
    let Some(path) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(1);
    };
    let result = RunConfig::from_path(&path).and_then(|mut cfg| {
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        run_from_config(&cfg, cmd, &cli.out, cli.workers)
    });
    match result {
        Ok(out) => {
            let s = &out.summary;
            println!(
                "{} {} on {}: {} after {} iterations (exit {})",
                s.command, s.algorithm, s.problem, s.terminated_by, s.iterations, s.exit_code
            );
            println!("summary: {}", out.summary_path.display());
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
