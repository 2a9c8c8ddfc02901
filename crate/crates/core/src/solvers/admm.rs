//! ADMM on the consensus form `min f̃(y) + I_C(c)  s.t.  y = c`.
//!
//! Each iteration alternates a generalized projection onto `S` (the exact
//! prox of `f̃`) with a Euclidean projection onto `C`:
//!
//! ```text
//! vᵏ   = cᵏ − uᵏ
//! βᵏ⁺¹ = argmin_{β∈S} ‖Aβ + ρvᵏ‖²
//! yᵏ⁺¹ = vᵏ + Aβᵏ⁺¹/ρ
//! cᵏ⁺¹ = P_C(yᵏ⁺¹ + uᵏ)
//! uᵏ⁺¹ = uᵏ + yᵏ⁺¹ − cᵏ⁺¹
//! ```
//!
//! The `βᵏ⁺¹` are intermediate quantities of the prox, not worst cases for
//! `cᵏ`; the worst case is recovered from the decision. Near `c = 0` the
//! worst case depends only on the direction of `c` and can be a poor
//! certificate, while the prox iterate is a good one: at a fixed point
//! `Aβ = ρu` with `u` in the normal cone of `C` at `c`. Both lie in `S`, so
//! the one with the smaller `h(β)` is reported and used in the gap.

use nalgebra::DVector;

use super::{
    check_warm_start, prox_ftilde, AdmmConfig, IterateTrace, Problem, SolveError, SolveResult,
    SolveStatus, TraceRecord, WarmStart,
};
use crate::regions::WorstCase;

fn recover_worst_case(
    problem: &Problem<'_>,
    c: &DVector<f64>,
    prox_beta: Option<&DVector<f64>>,
    config: &AdmmConfig,
) -> Result<WorstCase, SolveError> {
    let worst = problem.worst_case(c, &config.barrier)?;
    if let Some(beta) = prox_beta {
        if problem.best_response(beta)? < problem.best_response(&worst.beta)? {
            return Ok(WorstCase {
                beta: beta.clone(),
                value: worst.value,
            });
        }
    }
    Ok(worst)
}

pub fn admm_solve(
    problem: &Problem<'_>,
    config: &AdmmConfig,
    init: Option<&WarmStart>,
) -> Result<(SolveResult, IterateTrace), SolveError> {
    config.validate()?;
    let rho = config.rho;
    let n = problem.space.num_channels();
    let sqrt_n = (n as f64).sqrt();

    // A warm start carries its parameters into the scaled dual: at a fixed
    // point y = c, so u = Aβ/ρ with β the worst case of c.
    let (mut c, mut u) = match init {
        Some(ws) => {
            check_warm_start(problem, ws)?;
            (ws.decision.clone(), problem.a.apply(&ws.params) / rho)
        }
        None => (problem.space.uniform_start(), DVector::zeros(n)),
    };

    let mut trace = IterateTrace::new("admm");
    let mut status = SolveStatus::MaxIterations;
    let mut detail = None;
    let mut iterations = 0;
    let mut last_beta = None;

    for k in 1..=config.max_iterations {
        let v = &c - &u;
        let (y, beta) = match prox_ftilde(problem.a, problem.region, rho, &v, &config.barrier) {
            Ok(step) => step,
            Err(err) => {
                status = SolveStatus::SubproblemFailure;
                detail = Some(err.to_string());
                break;
            }
        };
        let c_next = problem.space.project(&(&y + &u))?;
        u += &y - &c_next;

        let primal = (&y - &c_next).norm();
        let dual = rho * (&c_next - &c).norm();
        let eps_pri = sqrt_n * config.eps_abs + config.eps_rel * y.norm().max(c_next.norm());
        let eps_dual = sqrt_n * config.eps_abs + config.eps_rel * rho * u.norm();
        c = c_next;
        iterations = k;
        last_beta = Some(beta);

        let duality_gap = if config.trace_gap {
            let worst = recover_worst_case(problem, &c, last_beta.as_ref(), config)?;
            Some(problem.gap_at(&worst)?)
        } else {
            None
        };
        trace.records.push(TraceRecord {
            iteration: k,
            primal_residual: Some(primal),
            dual_residual: Some(dual),
            eps_pri: Some(eps_pri),
            eps_dual: Some(eps_dual),
            duality_gap,
        });

        if primal <= eps_pri && dual <= eps_dual {
            status = SolveStatus::Converged;
            break;
        }
    }

    let worst = recover_worst_case(problem, &c, last_beta.as_ref(), config)?;
    let mut result = SolveResult::at(problem, c, worst, status, iterations);
    result.detail = detail;
    Ok((result, trace))
}
