use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use routeswap::cli::{self, ClassifyOpts, SimulateOpts, SweepOpts, UeOpts};

/// Day-to-day route-swapping dynamics on traffic networks.
#[derive(Parser)]
#[command(name = "routeswap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file against all structural invariants.
    Validate {
        /// Network JSON file.
        network: PathBuf,
    },
    /// Run one disruption trajectory and emit trajectory.csv + summary.json.
    Simulate {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Reaction sensitivity (defaults to the first grid value).
        #[arg(long)]
        theta: Option<f64>,
        /// Reduce this link instead of the scenario's reduction list.
        #[arg(long)]
        cap_link: Option<String>,
        /// Capacity-reduction fraction in [0, 1).
        #[arg(long)]
        cap_fraction: Option<f64>,
        /// Output directory (default: $ROUTESWAP_OUT or the current dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole (theta, cap) grid and emit sweep.csv + phases.json.
    Sweep {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Worker threads for independent cells (output is identical at any
        /// level).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory (default: $ROUTESWAP_OUT or the current dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-derive the phase table from an existing sweep.csv.
    Classify {
        /// Sweep CSV produced by `sweep`.
        sweep_csv: PathBuf,
        /// Converged/oscillating threshold on the deviation index.
        #[arg(long, default_value_t = routeswap::analysis::DEFAULT_AD_TOL)]
        ad_tol: f64,
        /// Output directory (default: $ROUTESWAP_OUT or the current dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the user equilibrium and report link/path flows and the gap.
    Ue {
        /// Network JSON file.
        network: PathBuf,
        /// Relative-gap tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Iteration budget.
        #[arg(long, default_value_t = 200_000)]
        max_iters: u64,
        /// Cost slack for the Wardrop verdict.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Also write ue.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { network } => cli::cmd_validate(&network),
        Command::Simulate {
            scenario,
            theta,
            cap_link,
            cap_fraction,
            out,
        } => cli::cmd_simulate(&SimulateOpts {
            scenario,
            theta,
            cap_link,
            cap_fraction,
            out,
        }),
        Command::Sweep { scenario, jobs, out } => cli::cmd_sweep(&SweepOpts {
            scenario,
            jobs,
            out,
        }),
        Command::Classify {
            sweep_csv,
            ad_tol,
            out,
        } => cli::cmd_classify(&ClassifyOpts {
            sweep_csv,
            ad_tol,
            out,
        }),
        Command::Ue {
            network,
            tol,
            max_iters,
            epsilon,
            out,
        } => cli::cmd_ue(&UeOpts {
            network,
            tol,
            max_iters,
            epsilon,
            out,
        }),
    };
    ExitCode::from(code)
}
