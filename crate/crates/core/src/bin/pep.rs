use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pep_forge::commands::{
    cmd_export_sdp, cmd_region, cmd_solve, cmd_sweep, cmd_verify, RunOptions,
};

/// Worst-case bounds for first-order methods.
#[derive(Parser)]
#[command(name = "pep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Main output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative duality-gap tolerance.
    #[arg(long, global = true)]
    tol_gap: Option<f64>,
    /// Relative feasibility tolerance.
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write a result record and instance.
    Solve { scenario: PathBuf },
    /// Evaluate a scenario along its h or lambda grid.
    Sweep { scenario: PathBuf },
    /// Scan the two-point feasibility region.
    Region { scenario: PathBuf },
    /// Re-check the instance stored with a result record.
    Verify { record: PathBuf },
    /// Write the compiled semidefinite program in triplet form.
    ExportSdp { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out: cli.flags.out,
        tol_gap: cli.flags.tol_gap,
        tol_feas: cli.flags.tol_feas,
        jobs: cli.flags.jobs,
    };
    let result = match &cli.command {
        Command::Solve { scenario } => cmd_solve(scenario, &opts),
        Command::Sweep { scenario } => cmd_sweep(scenario, &opts),
        Command::Region { scenario } => cmd_region(scenario, &opts),
        Command::Verify { record } => cmd_verify(record, &opts),
        Command::ExportSdp { scenario } => cmd_export_sdp(scenario, &opts),
    };
    match result {
        Ok(outcome) => {
            let mut text = outcome.report;
            for f in &outcome.files {
                text.push_str(&format!("wrote {}\n", f.display()));
            }
            // a closed stdout (e.g. piped into `head`) is not an error
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(outcome.exit_code.clamp(0, 255) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
