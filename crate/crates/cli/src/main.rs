mod commands;
mod crosscheck;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfeedback::bloch::PolarState;
use qfeedback::trajectory::SimConfig;

use crate::error::{CliError, Result};
use crate::output::{emit, json_bytes, Format};

#[derive(Parser)]
#[command(name = "qfeedback", version, about = "Feedback control of a homodyne-monitored two-level atom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct Target {
    /// Target angle theta0 (0 = excited, pi = ground)
    #[arg(long, allow_negative_numbers = true)]
    theta0: f64,
    /// Detection efficiency
    #[arg(long)]
    eta: f64,
    /// Dephasing rate
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary states reachable without feedback, with Markovian and with
    /// state-estimate feedback
    Locus {
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Purity of both strategies as a function of detection efficiency
    EtaSweep {
        #[arg(long, allow_negative_numbers = true)]
        theta0: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.1)]
        eta_min: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare analytic results with Monte-Carlo ensembles (JSON report)
    Crosscheck {
        /// `default` or a JSON file holding an array of grid points
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 2000)]
        ntraj: usize,
        #[arg(long, default_value_t = 20.0)]
        tfinal: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write trajectory 0 of every simulated point into this directory
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Worker threads (results do not depend on this)
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Purity loss caused by a feedback delay
    Delay {
        /// Delays, comma separated
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.01,0.02,0.03,0.04,0.05,0.06,0.07,0.08,0.09,0.1,0.11,0.12,0.13,0.14,0.15"
        )]
        tau: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 2000)]
        ntraj: usize,
        #[arg(long, default_value_t = 10.0)]
        tfinal: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Stationary purity under ideal state-estimate feedback
    BayesRss {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Optimal Markovian gain, drive and purity
    MarkovOptimal {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Locus { eta, gamma, points, output } => {
            let table = commands::locus(eta, gamma, points)?;
            emit(&table.render(output.format)?, output.out.as_deref())
        }
        Command::EtaSweep { theta0, gamma, eta_min, eta_max, steps, output } => {
            let table = commands::eta_sweep(theta0, gamma, eta_min, eta_max, steps)?;
            emit(&table.render(output.format)?, output.out.as_deref())
        }
        Command::BayesRss { target, output } => {
            let table = commands::bayes_rss(target.theta0, target.eta, target.gamma)?;
            emit(&table.render(output.format)?, output.out.as_deref())
        }
        Command::MarkovOptimal { target, output } => {
            let table = commands::markov_optimal(target.theta0, target.eta, target.gamma)?;
            emit(&table.render(output.format)?, output.out.as_deref())
        }
        Command::Delay { tau, dt, ntraj, tfinal, seed, threads, output } => {
            set_threads(threads)?;
            let mut cfg = SimConfig::new(tfinal, ntraj, seed);
            cfg.dt = dt;
            cfg.initial = PolarState::pure(0.0);
            let (table, slope) = commands::delay(&tau, &cfg)?;
            if let Some(slope) = slope {
                eprintln!("least-squares slope dp/dtau = {slope:.4}");
            }
            emit(&table.render(output.format)?, output.out.as_deref())
        }
        Command::Crosscheck { grid, dt, ntraj, tfinal, seed, dump, threads, out } => {
            set_threads(threads)?;
            let points =
                if grid == "default" { crosscheck::default_grid() } else { crosscheck::load_grid(grid.as_ref())? };
            let settings = crosscheck::Settings { dt, n_traj: ntraj, t_final: tfinal, seed, dump };
            let outcome = crosscheck::run(&points, &grid, &settings)?;
            emit(&json_bytes(&outcome.report), out.as_deref())?;
            if outcome.failures > 0 {
                return Err(CliError::CrosscheckFailed(outcome.failures, outcome.total));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
