//! Worst-case vs. expected-outcome frontier.
//!
//! Each point solves the robust problem over `C ∩ {c : cᵀAβ̂ ≥ φ}`. The
//! sweep runs from the largest floor `φ = h(β̂)`, where the only feasible
//! decisions are the naive optimal ones, downwards. Lowering `φ` only
//! enlarges the feasible set, so each solution is a valid warm start for
//! the next.

use nalgebra::DVector;

use crate::decision::{self, DecisionSpace};
use crate::model::OutcomeMatrix;
use crate::regions::ConfidenceRegion;
use crate::solvers::{admm_solve, AdmmConfig, Problem, SolveError, SolveStatus, WarmStart};

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub phi: f64,
    pub decision: DVector<f64>,
    pub robust_value: f64,
    pub expected_value: f64,
    pub iterations: usize,
    pub warm_started: bool,
    pub status: Option<SolveStatus>,
    /// Set when the point is infeasible or its solve failed.
    pub error: Option<String>,
}

impl ParetoPoint {
    fn failed(phi: f64, n: usize, error: String) -> Self {
        ParetoPoint {
            phi,
            decision: DVector::zeros(n),
            robust_value: f64::NAN,
            expected_value: f64::NAN,
            iterations: 0,
            warm_started: false,
            status: None,
            error: Some(error),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// `h(β̂)`, the largest feasible floor.
pub fn max_floor(
    a: &OutcomeMatrix,
    region: &ConfidenceRegion,
    space: &DecisionSpace,
) -> Result<f64, SolveError> {
    Ok(decision::best_response_value(&space.without_floor(), region.center(), a)?.0)
}

/// `points` evenly spaced floors from `h(β̂)` down to the expected value
/// of the unconstrained robust solution.
pub fn default_grid(
    a: &OutcomeMatrix,
    region: &ConfidenceRegion,
    space: &DecisionSpace,
    config: &AdmmConfig,
    points: usize,
) -> Result<Vec<f64>, SolveError> {
    let base = space.without_floor();
    let problem = Problem::new(a, region, &base)?;
    let (unconstrained, _) = admm_solve(&problem, config, None)?;
    let top = max_floor(a, region, space)?;
    let bottom = unconstrained.expected_value.min(top);
    Ok(match points {
        0 => vec![],
        1 => vec![top],
        _ => (0..points)
            .map(|i| top - (top - bottom) * i as f64 / (points - 1) as f64)
            .collect(),
    })
}

/// Warm-started sweep over a descending grid of floors.
pub fn sweep(
    a: &OutcomeMatrix,
    region: &ConfidenceRegion,
    space: &DecisionSpace,
    grid: &[f64],
    config: &AdmmConfig,
) -> Result<Vec<ParetoPoint>, SolveError> {
    sweep_with(a, region, space, grid, config, true)
}

/// As [`sweep`], optionally solving every point from a cold start.
pub fn sweep_with(
    a: &OutcomeMatrix,
    region: &ConfidenceRegion,
    space: &DecisionSpace,
    grid: &[f64],
    config: &AdmmConfig,
    warm: bool,
) -> Result<Vec<ParetoPoint>, SolveError> {
    if grid.windows(2).any(|w| !(w[0] >= w[1])) {
        return Err(SolveError::InvalidConfig("floor grid must be descending".into()));
    }
    let base = space.without_floor();
    Problem::new(a, region, &base)?;
    let beta_hat = region.center();
    let n = base.num_channels();

    let mut start = if warm {
        let c0 = decision::naive_optimal(&base, beta_hat, a)?;
        let params = region.worst_case_params_with(&c0, a, &config.barrier)?.beta;
        Some(WarmStart {
            decision: c0,
            params,
        })
    } else {
        None
    };
    let mut first = true;
    let mut points = Vec::with_capacity(grid.len());

    for &phi in grid {
        let floored = match base.with_floor(beta_hat, a, phi) {
            Ok(s) => s,
            Err(err) => {
                points.push(ParetoPoint::failed(phi, n, err.to_string()));
                continue;
            }
        };
        let problem = Problem::new(a, region, &floored)?;
        match admm_solve(&problem, config, start.as_ref()) {
            Ok((result, _)) => {
                let warm_started = warm && !first;
                first = false;
                if warm {
                    start = Some(WarmStart {
                        decision: result.decision.clone(),
                        params: result.worst_case.clone(),
                    });
                }
                points.push(ParetoPoint {
                    phi,
                    error: result.detail.clone(),
                    decision: result.decision,
                    robust_value: result.robust_value,
                    expected_value: result.expected_value,
                    iterations: result.iterations,
                    warm_started,
                    status: Some(result.status),
                });
            }
            Err(err) => points.push(ParetoPoint::failed(phi, n, err.to_string())),
        }
    }
    Ok(points)
}
