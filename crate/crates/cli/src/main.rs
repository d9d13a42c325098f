//! `nllt` — analysis of nonconventional sums S_N = sum F(xi_n, xi_2n, ...,
//! xi_ln) over finite-state Markov chains.
//!
//! Subcommands: `analyze` (coefficients, decomposition, lattice verdict,
//! exact variance, positivity), `simulate` (empirical distribution + CLT
//! check + covariance structure), `llt` (local limit comparison table),
//! `cf-scan` (characteristic-function decay and operator contraction).
//!
//! Exit codes: 0 success, 2 parse/validation errors, 3 precondition
//! failures (degenerate variance, unclassified lattice structure),
//! 4 budget or cap violations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nllt_core::sim::CfMode;

mod commands;
mod report;

#[derive(Parser)]
#[command(
    name = "nllt",
    version,
    about = "Nonconventional-sum analysis for finite-state Markov chains",
    after_help = "\
CSV columns:
  distribution.csv  u,mass,stderr           point masses of S_N
  llt.csv           u,L,R,stderr            L = sigma sqrt(2 pi N) P{S_N=u},
                                            R = h exp(-u^2/(2 N sigma^2))
  cf.csv            theta,n,abs_phi,mode,below_floor
  contraction.csv   theta,prefix_index,rho

Environment:
  NLLT_MAX_ENUM     overrides the enumeration cap on paths (default 2^24)

Instance files are JSON: {\"chain\": {\"states\": [..], \"transition\":
[[..]], \"stationary\"?: [..]}, \"observable\": {\"ell\": n, \"values\":
[..], \"exact_values\"?: [\"p/q\" | \"a+b*sqrt2\", ..]}, \"defaults\"?:
{\"seed\", \"samples\", \"horizon\", \"workers\"}}. Transition entries may
be numbers or exact strings like \"1/3\"."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Chain coefficients, decomposition, lattice verdict, exact variance
    /// and the positivity verdict, as one JSON report.
    Analyze {
        instance: PathBuf,
        /// Tabulate psi/delta/rho for k = 1..=K.
        #[arg(long, default_value_t = 20)]
        k_max: usize,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample S_N: empirical distribution CSV, CLT Kolmogorov-Smirnov
    /// statistic and the component covariance structure.
    Simulate {
        instance: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=1024))]
        workers: Option<u64>,
        /// Reference variance for the CLT check (default: the same-sample
        /// estimate).
        #[arg(long)]
        sigma2: Option<f64>,
        /// Output directory for distribution.csv and report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Local limit comparison: scaled point masses of S_N against the
    /// Gaussian density, over the lattice (or a smoothed real grid).
    Llt {
        instance: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=1024))]
        workers: Option<u64>,
        /// Asymptotic variance sigma^2 (default: estimated on a small
        /// horizon grid first).
        #[arg(long)]
        sigma2: Option<f64>,
        /// Triangle half-width for the non-lattice comparison.
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Characteristic-function decay scan plus the operator contraction
    /// profile.
    CfScan {
        instance: PathBuf,
        /// Frequencies: "0.1,0.5,1.0" or "lo:hi:count".
        #[arg(long = "theta-grid")]
        theta_grid: String,
        /// Horizons: "2:10", "2:10:2" or "2,4,8".
        #[arg(long = "n-grid")]
        n_grid: String,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=1024))]
        workers: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            instance,
            k_max,
            out,
        } => commands::cmd_analyze(&instance, k_max, out.as_deref()),
        Command::Simulate {
            instance,
            horizon,
            samples,
            seed,
            workers,
            sigma2,
            out,
        } => commands::cmd_simulate(
            &instance,
            commands::SimFlagArgs {
                horizon,
                samples,
                seed,
                workers,
            },
            sigma2,
            &out,
        ),
        Command::Llt {
            instance,
            horizon,
            samples,
            seed,
            workers,
            sigma2,
            width,
            out,
        } => commands::cmd_llt(
            &instance,
            commands::SimFlagArgs {
                horizon,
                samples,
                seed,
                workers,
            },
            sigma2,
            width,
            &out,
        ),
        Command::CfScan {
            instance,
            theta_grid,
            n_grid,
            mode,
            samples,
            seed,
            workers,
            out,
        } => commands::cmd_cf_scan(
            &instance,
            &theta_grid,
            &n_grid,
            match mode {
                ModeArg::Exact => CfMode::Exact,
                ModeArg::Mc => CfMode::MonteCarlo,
            },
            samples.map(|v| v as usize),
            seed,
            workers.map(|v| v as usize),
            &out,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
