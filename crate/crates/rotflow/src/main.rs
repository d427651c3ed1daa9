use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rotflow::commands::{cmd_evolve, cmd_propagator, cmd_solve, cmd_verify, EvolveMode, Suite};
use rotflow::scenario::Scenario;
use rotflow::{Failure, EXIT_OK, EXIT_VALIDATION};

/// Evolution systems for flow around a rotating obstacle: propagators,
/// linear evolutions, mild solutions and verification suites.
#[derive(Parser)]
#[command(name = "rotflow", version)]
struct Cli {
    /// Worker threads. Accepted for compatibility; runs are single-threaded.
    #[arg(long, global = true, env = "ROTFLOW_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print U(t,s), g(t,s), Q(t,s) and their diagnostics.
    Propagator {
        scenario: PathBuf,
        /// Start time (default: s0).
        #[arg(long)]
        s: Option<f64>,
        /// End time (default: s + T0).
        #[arg(long)]
        t: Option<f64>,
        /// Also write the values as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evolve the initial data and write evolve.rnsf and evolve.csv.
    Evolve {
        scenario: PathBuf,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        /// Apply V(t,s); the data must be divergence-free.
        #[arg(long, conflicts_with = "scalar")]
        solenoidal: bool,
        /// Apply G(t,s) to the first component.
        #[arg(long)]
        scalar: bool,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Picard solve of the nonlinear problem; exit 4 without convergence.
    Solve {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Skip the per-time field dumps.
        #[arg(long)]
        no_dumps: bool,
    },
    /// Run one verification suite; exit 0 iff its tolerances are met.
    Verify {
        scenario: PathBuf,
        suite: SuiteArg,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Lplq,
    Gradient,
    Qbounds,
    Smalltime,
    Evolutionlaw,
    Generator,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Lplq => Suite::Lplq,
            SuiteArg::Gradient => Suite::Gradient,
            SuiteArg::Qbounds => Suite::QBounds,
            SuiteArg::Smalltime => Suite::SmallTime,
            SuiteArg::Evolutionlaw => Suite::EvolutionLaw,
            SuiteArg::Generator => Suite::Generator,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.threads == Some(0) {
        return Err(Failure::Validation("--threads must be at least 1".into()));
    }
    let stdout = std::io::stdout();
    let out = &mut stdout.lock();
    match cli.command {
        Command::Propagator { scenario, s, t, csv } => {
            cmd_propagator(&Scenario::load(&scenario)?, s, t, csv.as_deref(), out)
        }
        Command::Evolve { scenario, s, t, solenoidal, scalar, out_dir } => {
            let mode = match (scalar, solenoidal) {
                (true, _) => EvolveMode::Scalar,
                (_, true) => EvolveMode::Solenoidal,
                _ => EvolveMode::Vector,
            };
            cmd_evolve(&Scenario::load(&scenario)?, s, t, mode, &out_dir, out)
        }
        Command::Solve { scenario, out_dir, no_dumps } => cmd_solve(&Scenario::load(&scenario)?, &out_dir, !no_dumps, out),
        Command::Verify { scenario, suite, out_dir } => {
            cmd_verify(&Scenario::load(&scenario)?, suite.into(), &out_dir, out).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("rotflow: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
