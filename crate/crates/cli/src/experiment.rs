//! Solver orchestration and CSV/JSON output.
//!
//! Trace files have the fixed header
//! `iteration,primal_residual,dual_residual,eps_pri,eps_dual,duality_gap,solver`;
//! quantities a solver does not produce are left empty. Frontier files
//! have `phi,robust_value,expected_value,iterations`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use robust_alloc::pareto::{self, ParetoPoint};
use robust_alloc::solvers::{
    admm_solve, apg_solve, markowitz_solve, subgradient_solve, IterateTrace, Problem, SolveError,
    SolveResult, TraceRecord,
};
use serde::Serialize;

use crate::problem::{BuiltProblem, ProblemFile, SolverKind, SolverSpec};
use crate::CliError;

pub const TRACE_HEADER: [&str; 7] = [
    "iteration",
    "primal_residual",
    "dual_residual",
    "eps_pri",
    "eps_dual",
    "duality_gap",
    "solver",
];

pub const FRONTIER_HEADER: [&str; 4] = ["phi", "robust_value", "expected_value", "iterations"];

pub const DEFAULT_PARETO_POINTS: usize = 11;

/// Runs one solver on `built` using the settings in `spec`.
///
/// Markowitz has no iterations to trace; its trace holds one record with
/// the gap at the returned decision.
pub fn run_solver(
    built: &BuiltProblem,
    spec: &SolverSpec,
    trace_gap: bool,
) -> Result<(SolveResult, IterateTrace), SolveError> {
    let problem = Problem::new(&built.a, &built.region, &built.space)?;
    match spec.name {
        SolverKind::Admm => {
            let config = robust_alloc::AdmmConfig {
                trace_gap,
                ..spec.admm_config()
            };
            admm_solve(&problem, &config, None)
        }
        SolverKind::Apg => {
            let config = robust_alloc::ApgConfig {
                trace_gap,
                ..spec.apg_config()
            };
            apg_solve(&problem, &config, None)
        }
        SolverKind::Subgradient => {
            let config = robust_alloc::SubgradientConfig {
                trace_gap,
                ..spec.subgradient_config()
            };
            subgradient_solve(&problem, &config, None)
        }
        SolverKind::Markowitz => {
            let result = markowitz_solve(&problem)?;
            let gap = if trace_gap {
                Some(problem.best_response(&result.worst_case)? - result.robust_value)
            } else {
                None
            };
            let trace = IterateTrace {
                solver: "markowitz".into(),
                records: vec![TraceRecord {
                    iteration: result.iterations,
                    duality_gap: gap,
                    ..TraceRecord::default()
                }],
            };
            Ok((result, trace))
        }
    }
}

fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trace<W: Write>(trace: &IterateTrace, out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        writer.write_record([
            r.iteration.to_string(),
            cell(r.primal_residual),
            cell(r.dual_residual),
            cell(r.eps_pri),
            cell(r.eps_dual),
            cell(r.duality_gap),
            trace.solver.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_frontier<W: Write>(points: &[ParetoPoint], out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(FRONTIER_HEADER)?;
    for p in points {
        let ok = p.is_ok();
        writer.write_record([
            p.phi.to_string(),
            cell(ok.then_some(p.robust_value)),
            cell(ok.then_some(p.expected_value)),
            p.iterations.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_to_file(
    path: &Path,
    write: impl FnOnce(fs::File) -> Result<(), csv::Error>,
) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write(file).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(source),
        other => CliError::Validation(format!("{other:?}")),
    })
}

pub fn save_trace(trace: &IterateTrace, path: &Path) -> Result<(), CliError> {
    csv_to_file(path, |f| write_trace(trace, f))
}

pub fn save_frontier(points: &[ParetoPoint], path: &Path) -> Result<(), CliError> {
    csv_to_file(path, |f| write_frontier(points, f))
}

/// Outcome of one solver in an experiment or a single solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSummary {
    pub solver: SolverKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robust_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SolverSummary {
    pub fn from_result(solver: SolverKind, result: &SolveResult, trace: &IterateTrace) -> Self {
        SolverSummary {
            solver,
            status: Some(result.status.to_string()),
            robust_value: Some(result.robust_value),
            expected_value: Some(result.expected_value),
            decision: Some(result.decision.iter().copied().collect()),
            iterations: Some(result.iterations),
            final_gap: trace.records.iter().rev().find_map(|r| r.duality_gap),
            trace_file: None,
            detail: result.detail.clone(),
            error: None,
        }
    }

    pub fn from_error(solver: SolverKind, error: &SolveError) -> Self {
        SolverSummary {
            solver,
            status: None,
            robust_value: None,
            expected_value: None,
            decision: None,
            iterations: None,
            final_gap: None,
            trace_file: None,
            detail: None,
            error: Some(error.to_string()),
        }
    }

    /// A hard error, or a solve that stopped without converging.
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.status.as_deref() != Some("converged")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub solvers: Vec<SolverSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frontier_file: Option<PathBuf>,
}

impl ExperimentSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summaries always serialize")
    }
}

/// Settings for `solver` in an experiment: the file's overrides when the
/// file names that solver, otherwise defaults; `iterations` caps all.
fn experiment_spec(problem: &ProblemFile, solver: SolverKind, iterations: Option<usize>) -> SolverSpec {
    let mut spec = match &problem.solver {
        Some(spec) if spec.name == solver => spec.clone(),
        _ => SolverSpec::named(solver),
    };
    if iterations.is_some() {
        spec.max_iterations = iterations;
    }
    spec
}

/// Runs `solvers` on the same problem with gap tracing, writing
/// `trace_<solver>.csv` and `summary.json` to `out_dir`, plus
/// `frontier.csv` when the file asks for a Pareto sweep.
///
/// Solver failures are recorded in the summary; only I/O and validation
/// problems are returned as errors.
pub fn run_experiment(
    problem: &ProblemFile,
    solvers: &[SolverKind],
    iterations: Option<usize>,
    out_dir: &Path,
) -> Result<ExperimentSummary, CliError> {
    let built = problem.build()?;
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_owned(),
        source,
    })?;

    let outcomes: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = solvers
            .iter()
            .map(|&kind| {
                let spec = experiment_spec(problem, kind, iterations);
                let built = &built;
                scope.spawn(move || run_solver(built, &spec, true))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });

    let mut summaries = Vec::with_capacity(solvers.len());
    for (&kind, outcome) in solvers.iter().zip(outcomes) {
        summaries.push(match outcome {
            Ok((result, trace)) => {
                let path = out_dir.join(format!("trace_{kind}.csv"));
                save_trace(&trace, &path)?;
                SolverSummary {
                    trace_file: Some(path),
                    ..SolverSummary::from_result(kind, &result, &trace)
                }
            }
            Err(err) => SolverSummary::from_error(kind, &err),
        });
    }

    let frontier_file = match &problem.pareto {
        Some(_) => {
            let points = run_pareto(problem, &built, None)?;
            let path = out_dir.join("frontier.csv");
            save_frontier(&points, &path)?;
            Some(path)
        }
        None => None,
    };

    let summary = ExperimentSummary {
        solvers: summaries,
        frontier_file,
    };
    let path = out_dir.join("summary.json");
    fs::write(&path, summary.to_json() + "\n").map_err(|source| CliError::Io { path, source })?;
    Ok(summary)
}

/// Warm-started frontier sweep. The grid is, in order of preference: an
/// evenly spaced grid of `points` floors, the file's explicit grid, the
/// file's point count, or [`DEFAULT_PARETO_POINTS`].
pub fn run_pareto(
    problem: &ProblemFile,
    built: &BuiltProblem,
    points: Option<usize>,
) -> Result<Vec<ParetoPoint>, CliError> {
    let config = problem.solver_spec().admm_config();
    let spec = problem.pareto.as_ref();
    let grid = match (points, spec.and_then(|s| s.grid.clone())) {
        (None, Some(grid)) => grid,
        (points, _) => {
            let k = points
                .or(spec.and_then(|s| s.points))
                .unwrap_or(DEFAULT_PARETO_POINTS);
            pareto::default_grid(&built.a, &built.region, &built.space, &config, k)?
        }
    };
    Ok(pareto::sweep(&built.a, &built.region, &built.space, &grid, &config)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_cells_empty_when_absent() {
        let trace = IterateTrace {
            solver: "apg".into(),
            records: vec![
                TraceRecord {
                    iteration: 1,
                    duality_gap: Some(0.25),
                    ..TraceRecord::default()
                },
                TraceRecord {
                    iteration: 2,
                    ..TraceRecord::default()
                },
            ],
        };
        let mut out = Vec::new();
        write_trace(&trace, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "iteration,primal_residual,dual_residual,eps_pri,eps_dual,duality_gap,solver\n\
             1,,,,,0.25,apg\n\
             2,,,,,,apg\n"
        );
    }

    #[test]
    fn failed_points_leave_values_empty() {
        let ok = ParetoPoint {
            phi: 0.5,
            decision: nalgebra::DVector::zeros(1),
            robust_value: 0.1,
            expected_value: 0.5,
            iterations: 7,
            warm_started: false,
            status: None,
            error: None,
        };
        let bad = ParetoPoint {
            phi: 9.0,
            error: Some("infeasible".into()),
            ..ok.clone()
        };
        let mut out = Vec::new();
        write_frontier(&[bad, ok], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "phi,robust_value,expected_value,iterations\n9,,,7\n0.5,0.1,0.5,7\n"
        );
    }
}
