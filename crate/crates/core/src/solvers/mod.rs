//! Solvers for `max_{c∈C} min_{β∈S} cᵀAβ`.
//!
//! [`admm_solve`] is the general-purpose method: it needs nothing from `S`
//! beyond the generalized projection and makes no smoothness assumption on
//! the worst-case objective `f(c) = min_{β∈S} cᵀAβ`. The baselines are
//! [`apg_solve`] (fast, but relies on `f` being differentiable),
//! [`subgradient_solve`] (slow, assumption free) and [`markowitz_solve`]
//! (closed form, ellipsoids only).

mod admm;
mod apg;
mod markowitz;
mod subgradient;

pub use admm::admm_solve;
pub use apg::apg_solve;
pub use markowitz::{markowitz_objective, markowitz_solve};
pub use subgradient::subgradient_solve;

use std::fmt;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::decision::{self, DecisionError, DecisionSpace};
use crate::model::{ModelError, OutcomeMatrix};
use crate::regions::{BarrierConfig, ConfidenceRegion, RegionError, WorstCase};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("region not ellipsoidal")]
    NotEllipsoidal,
    #[error("infeasible argument: {0}")]
    Infeasible(String),
    #[error("problem dimensions disagree: {0}")]
    Dimension(String),
}

/// Problem data shared by every solver: the outcome matrix, the confidence
/// region and the decision space.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub a: &'a OutcomeMatrix,
    pub region: &'a ConfidenceRegion,
    pub space: &'a DecisionSpace,
}

impl<'a> Problem<'a> {
    pub fn new(
        a: &'a OutcomeMatrix,
        region: &'a ConfidenceRegion,
        space: &'a DecisionSpace,
    ) -> Result<Self, SolveError> {
        if region.dim() != a.num_params() {
            return Err(SolveError::Dimension(format!(
                "region has {} parameters, outcome matrix {}",
                region.dim(),
                a.num_params()
            )));
        }
        if space.num_channels() != a.num_channels() {
            return Err(SolveError::Dimension(format!(
                "decision space has {} channels, outcome matrix {}",
                space.num_channels(),
                a.num_channels()
            )));
        }
        Ok(Problem { a, region, space })
    }

    /// `f(c)` and its minimizer.
    pub fn worst_case(&self, c: &DVector<f64>, barrier: &BarrierConfig) -> Result<WorstCase, SolveError> {
        Ok(self.region.worst_case_params_with(c, self.a, barrier)?)
    }

    /// `g(c; β̂)`.
    pub fn expected_value(&self, c: &DVector<f64>) -> f64 {
        c.dot(&self.a.apply(self.region.center()))
    }

    /// `h(β)` over the budget simplex, ignoring any floor.
    pub fn best_response(&self, beta: &DVector<f64>) -> Result<f64, SolveError> {
        let space = self.space.without_floor();
        Ok(decision::best_response_value(&space, beta, self.a)?.0)
    }

    /// `h(β⋆(c)) − f(c)` for the worst case of `c`.
    fn gap_at(&self, worst: &WorstCase) -> Result<f64, SolveError> {
        Ok(self.best_response(&worst.beta)? - worst.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    SubproblemFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::SubproblemFailure => "subproblem-failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub decision: DVector<f64>,
    pub worst_case: DVector<f64>,
    /// `f(c⋆)`
    pub robust_value: f64,
    /// `g(c⋆; β̂)`
    pub expected_value: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Why a solve stopped early, when it did.
    pub detail: Option<String>,
}

impl SolveResult {
    fn at(
        problem: &Problem<'_>,
        c: DVector<f64>,
        worst: WorstCase,
        status: SolveStatus,
        iterations: usize,
    ) -> Self {
        SolveResult {
            expected_value: problem.expected_value(&c),
            decision: c,
            worst_case: worst.beta,
            robust_value: worst.value,
            status,
            iterations,
            detail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceRecord {
    pub iteration: usize,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub eps_pri: Option<f64>,
    pub eps_dual: Option<f64>,
    pub duality_gap: Option<f64>,
}

/// Per-iteration diagnostics of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub solver: String,
    pub records: Vec<TraceRecord>,
}

impl IterateTrace {
    fn new(solver: &str) -> Self {
        IterateTrace {
            solver: solver.to_owned(),
            records: Vec::new(),
        }
    }

    /// Smallest traced gap among the first `iterations` iterations.
    pub fn best_gap_within(&self, iterations: usize) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.iteration <= iterations)
            .filter_map(|r| r.duality_gap)
            .reduce(f64::min)
    }

    pub fn gap_at(&self, iteration: usize) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.iteration == iteration)
            .and_then(|r| r.duality_gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    /// Penalty `ρ > 0` of the augmented Lagrangian.
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iterations: usize,
    /// Record `h(β⋆(cᵏ)) − f(cᵏ)` every iteration. Costs one extra
    /// linear minimization over `S` per iteration.
    pub trace_gap: bool,
    pub barrier: BarrierConfig,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: 1.0,
            eps_abs: 1e-6,
            eps_rel: 1e-4,
            max_iterations: 5000,
            trace_gap: false,
            barrier: BarrierConfig::default(),
        }
    }
}

impl AdmmConfig {
    fn validate(&self) -> Result<(), SolveError> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(SolveError::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(SolveError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApgConfig {
    pub max_iterations: usize,
    /// First trial step of the backtracking line search.
    pub initial_step: f64,
    /// Stop once the gradient-mapping norm falls below this.
    pub tolerance: f64,
    pub max_backtracks: usize,
    pub trace_gap: bool,
    pub barrier: BarrierConfig,
}

impl Default for ApgConfig {
    fn default() -> Self {
        ApgConfig {
            max_iterations: 500,
            initial_step: 1.0,
            tolerance: 1e-9,
            max_backtracks: 60,
            trace_gap: false,
            barrier: BarrierConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientConfig {
    pub max_iterations: usize,
    /// `α₀` of the `α₀/√k` schedule; `None` picks `1/‖A‖₂`.
    pub initial_step: Option<f64>,
    pub trace_gap: bool,
    pub barrier: BarrierConfig,
}

impl Default for SubgradientConfig {
    fn default() -> Self {
        SubgradientConfig {
            max_iterations: 1000,
            initial_step: None,
            trace_gap: false,
            barrier: BarrierConfig::default(),
        }
    }
}

/// Initial decision and parameters for a warm-started solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub decision: DVector<f64>,
    pub params: DVector<f64>,
}

/// Proximal point of `f̃/ρ` at `v`, where `f̃(y) = max_{β∈S} −yᵀAβ`.
///
/// The minimax problem `min_y max_β −yᵀAβ + (ρ/2)‖y − v‖²` is convex in
/// `y` and linear in `β`, so the order can be swapped. The inner minimum is
/// attained at `y = v + Aβ/ρ`, leaving `max_β −‖Aβ + ρv‖²/(2ρ)`: a
/// generalized projection of `−ρv` onto `S`.
pub fn prox_ftilde(
    a: &OutcomeMatrix,
    region: &ConfidenceRegion,
    rho: f64,
    v: &DVector<f64>,
    barrier: &BarrierConfig,
) -> Result<(DVector<f64>, DVector<f64>), SolveError> {
    if !(rho > 0.0) {
        return Err(SolveError::InvalidConfig(format!("rho must be positive, got {rho}")));
    }
    let target = v * -rho;
    let beta = region.generalized_projection_with(a.matrix(), &target, barrier)?;
    let y = v + a.apply(&beta) / rho;
    Ok((y, beta))
}

/// `h(β) − f(c)`, with `h` taken over the budget simplex without floor.
/// Nonnegative for feasible pairs by weak duality.
pub fn duality_gap(
    problem: &Problem<'_>,
    c: &DVector<f64>,
    beta: &DVector<f64>,
) -> Result<f64, SolveError> {
    if !problem.space.contains(c, 1e-8) {
        return Err(SolveError::Infeasible("decision outside the decision space".into()));
    }
    if !problem.region.contains(beta, 1e-6) {
        return Err(SolveError::Infeasible("parameters outside the confidence region".into()));
    }
    let worst = problem.worst_case(c, &BarrierConfig::default())?;
    Ok(problem.best_response(beta)? - worst.value)
}

pub(crate) fn check_warm_start(problem: &Problem<'_>, init: &WarmStart) -> Result<(), SolveError> {
    if !problem.space.contains(&init.decision, 1e-8) {
        return Err(SolveError::Infeasible("initial decision outside the decision space".into()));
    }
    if !problem.region.contains(&init.params, 1e-6) {
        return Err(SolveError::Infeasible("initial parameters outside the confidence region".into()));
    }
    Ok(())
}
