use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_alloc_cli::experiment::{self, SolverSummary};
use robust_alloc_cli::generate::{generate_lift_study, parse_trial_range};
use robust_alloc_cli::{CliError, Flags, ProblemFile, RegionSpec, SolverKind};

/// Robust budget allocation over confidence regions of a lift study.
#[derive(Parser)]
#[command(name = "robust-alloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print a JSON summary.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// admm, apg, subgradient or markowitz.
        #[arg(long)]
        solver: Option<SolverKind>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Write the iterate trace, with duality gaps, to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Let flags replace values present in the problem file.
        #[arg(long = "override")]
        force: bool,
        /// Exit with status 4 unless the solver converges.
        #[arg(long)]
        strict: bool,
    },
    /// Run several solvers on one problem and write traces and a summary.
    Experiment {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "admm,apg,subgradient")]
        solvers: Vec<SolverKind>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Iteration cap applied to every solver.
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        #[arg(long)]
        strict: bool,
    },
    /// Sweep the expected-outcome floor and print the frontier as CSV.
    Pareto {
        #[arg(long)]
        problem: PathBuf,
        /// Number of evenly spaced floors.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Write a synthetic problem file.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        channels: usize,
        #[arg(long, default_value = "200:500")]
        trials: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn solve(
    path: PathBuf,
    flags: Flags,
    trace: Option<PathBuf>,
    strict: bool,
) -> Result<bool, CliError> {
    let mut problem = ProblemFile::load(&path)?;
    problem.apply_flags(&flags);
    let built = problem.build()?;
    let spec = problem.solver_spec();
    let (result, iterates) = experiment::run_solver(&built, &spec, trace.is_some())?;
    if let Some(path) = &trace {
        experiment::save_trace(&iterates, path)?;
    }
    let summary = SolverSummary {
        trace_file: trace,
        ..SolverSummary::from_result(spec.name, &result, &iterates)
    };
    print_json(&summary);
    Ok(strict && summary.failed())
}

fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Solve {
            problem,
            solver,
            rho,
            alpha,
            trace,
            force,
            strict,
        } => {
            let flags = Flags {
                solver,
                rho,
                alpha,
                force,
            };
            solve(problem, flags, trace, strict)
        }
        Command::Experiment {
            problem,
            solvers,
            out_dir,
            iterations,
            strict,
        } => {
            let problem = ProblemFile::load(&problem)?;
            let summary = experiment::run_experiment(&problem, &solvers, Some(iterations), &out_dir)?;
            println!("{}", summary.to_json());
            Ok(strict && summary.solvers.iter().any(SolverSummary::failed))
        }
        Command::Pareto {
            problem,
            grid,
            out,
            strict,
        } => {
            let problem = ProblemFile::load(&problem)?;
            let built = problem.build()?;
            let points = experiment::run_pareto(&problem, &built, grid)?;
            for p in points.iter().filter(|p| !p.is_ok()) {
                eprintln!("phi = {}: {}", p.phi, p.error.as_deref().unwrap_or(""));
            }
            match &out {
                Some(path) => experiment::save_frontier(&points, path)?,
                None => experiment::write_frontier(&points, io::stdout().lock()).map_err(|e| {
                    CliError::Validation(format!("writing frontier: {e}"))
                })?,
            }
            Ok(strict && points.iter().any(|p| !p.is_ok()))
        }
        Command::Generate {
            seed,
            channels,
            trials,
            alpha,
            out,
        } => {
            let range = parse_trial_range(&trials)?;
            let study = generate_lift_study(seed, channels, range)?;
            let mut problem = ProblemFile::new(study, RegionSpec::BinomialLr { alpha });
            problem.seed = Some(seed);
            problem.validate()?;
            problem.save(&out)?;
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(4),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
