//! Accelerated projected gradient ascent on `f(c) = min_{β∈S} cᵀAβ`.
//!
//! The gradient comes from Danskin's theorem, `∇f(c) = Aβ⋆(c)`, which is
//! only valid when the worst case is unique. Backtracking enforces the
//! quadratic lower model at every step and momentum restarts whenever the
//! objective drops; when neither helps the solve ends with
//! [`SolveStatus::SubproblemFailure`].

use super::{
    check_warm_start, ApgConfig, IterateTrace, Problem, SolveError, SolveResult, SolveStatus,
    TraceRecord, WarmStart,
};

pub fn apg_solve(
    problem: &Problem<'_>,
    config: &ApgConfig,
    init: Option<&WarmStart>,
) -> Result<(SolveResult, IterateTrace), SolveError> {
    if !(config.initial_step > 0.0) {
        return Err(SolveError::InvalidConfig("initial step must be positive".into()));
    }
    let mut x = match init {
        Some(ws) => {
            check_warm_start(problem, ws)?;
            ws.decision.clone()
        }
        None => problem.space.uniform_start(),
    };
    let mut worst_x = problem.worst_case(&x, &config.barrier)?;
    let mut z = x.clone();
    let mut worst_z = worst_x.clone();
    let mut theta = 1.0f64;
    let mut step = config.initial_step;

    let mut trace = IterateTrace::new("apg");
    let mut status = SolveStatus::MaxIterations;
    let mut detail = None;
    let mut iterations = 0;

    for k in 1..=config.max_iterations {
        let grad = problem.a.apply(&worst_z.beta);
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let candidate = problem.space.project(&(&z + &grad * step))?;
            let worst = problem.worst_case(&candidate, &config.barrier)?;
            let d = &candidate - &z;
            let model = worst_z.value + grad.dot(&d) - d.norm_squared() / (2.0 * step);
            if worst.value >= model - 1e-14 * (1.0 + model.abs()) {
                accepted = Some((candidate, worst));
                break;
            }
            step *= 0.5;
        }
        let Some((x_next, worst_next)) = accepted else {
            status = SolveStatus::SubproblemFailure;
            detail = Some(format!(
                "line search failed after {} backtracks",
                config.max_backtracks
            ));
            break;
        };
        iterations = k;
        let mapping = (&x_next - &z).norm() / step;

        if worst_next.value < worst_x.value {
            // Momentum overshot; restart from the last iterate.
            theta = 1.0;
            z = x.clone();
            worst_z = worst_x.clone();
        } else {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let momentum = (theta - 1.0) / theta_next;
            z = &x_next + (&x_next - &x) * momentum;
            worst_z = if momentum == 0.0 {
                worst_next.clone()
            } else {
                problem.worst_case(&z, &config.barrier)?
            };
            theta = theta_next;
            x = x_next;
            worst_x = worst_next;
        }

        let duality_gap = if config.trace_gap {
            Some(problem.gap_at(&worst_x)?)
        } else {
            None
        };
        trace.records.push(TraceRecord {
            iteration: k,
            duality_gap,
            ..TraceRecord::default()
        });

        if mapping <= config.tolerance {
            status = SolveStatus::Converged;
            break;
        }
    }

    let mut result = SolveResult::at(problem, x, worst_x, status, iterations);
    result.detail = detail;
    Ok((result, trace))
}
