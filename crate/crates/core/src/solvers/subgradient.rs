//! Projected supergradient ascent with the diminishing step `α₀/√k`.

use super::{
    check_warm_start, IterateTrace, Problem, SolveError, SolveResult, SolveStatus,
    SubgradientConfig, TraceRecord, WarmStart,
};

/// Power-iteration steps behind the default `α₀ = 1/‖A‖₂`.
const POWER_ITERATIONS: usize = 50;

pub fn subgradient_solve(
    problem: &Problem<'_>,
    config: &SubgradientConfig,
    init: Option<&WarmStart>,
) -> Result<(SolveResult, IterateTrace), SolveError> {
    let initial_step = match config.initial_step {
        Some(step) if step > 0.0 => step,
        Some(step) => {
            return Err(SolveError::InvalidConfig(format!(
                "initial step must be positive, got {step}"
            )))
        }
        None => 1.0 / problem.a.spectral_norm_estimate(POWER_ITERATIONS),
    };
    let mut c = match init {
        Some(ws) => {
            check_warm_start(problem, ws)?;
            ws.decision.clone()
        }
        None => problem.space.uniform_start(),
    };
    let mut worst = problem.worst_case(&c, &config.barrier)?;
    let mut best = (c.clone(), worst.clone());
    let mut trace = IterateTrace::new("subgradient");

    for k in 1..=config.max_iterations {
        let step = initial_step / (k as f64).sqrt();
        let supergradient = problem.a.apply(&worst.beta);
        c = problem.space.project(&(&c + supergradient * step))?;
        worst = problem.worst_case(&c, &config.barrier)?;
        if worst.value > best.1.value {
            best = (c.clone(), worst.clone());
        }
        let duality_gap = if config.trace_gap {
            Some(problem.gap_at(&worst)?)
        } else {
            None
        };
        trace.records.push(TraceRecord {
            iteration: k,
            duality_gap,
            ..TraceRecord::default()
        });
    }

    let (c, worst) = best;
    let result = SolveResult::at(
        problem,
        c,
        worst,
        SolveStatus::MaxIterations,
        config.max_iterations,
    );
    Ok((result, trace))
}
