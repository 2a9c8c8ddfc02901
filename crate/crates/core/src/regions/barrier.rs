//! Log-barrier Newton method over a single smooth convex constraint.
//!
//! Minimizes `t·obj(β) + B(β)` for an increasing sequence of barrier
//! weights `t`, where `B` is the region's barrier (`−log` of the slack in
//! its defining inequality plus any box terms). Line searches compare exact
//! objective increments rather than absolute values, since `t·obj` reaches
//! 1e14 in the last stages and absolute comparisons drown in rounding.

use nalgebra::{DMatrix, DVector};

use super::{BarrierConfig, RegionError};

/// Smooth convex objectives the region primitives minimize.
pub(crate) enum Objective<'a> {
    /// `qᵀβ`
    Linear(&'a DVector<f64>),
    /// `‖Mβ − w‖²`
    LeastSquares {
        map: &'a DMatrix<f64>,
        target: &'a DVector<f64>,
        gram: DMatrix<f64>,
    },
}

impl<'a> Objective<'a> {
    pub fn least_squares(map: &'a DMatrix<f64>, target: &'a DVector<f64>) -> Self {
        Objective::LeastSquares {
            map,
            target,
            gram: map.tr_mul(map) * 2.0,
        }
    }

    fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        match self {
            Objective::Linear(q) => (*q).clone(),
            Objective::LeastSquares { map, target, .. } => map.tr_mul(&(*map * beta - *target)) * 2.0,
        }
    }

    fn add_hessian(&self, scale: f64, hess: &mut DMatrix<f64>) {
        if let Objective::LeastSquares { gram, .. } = self {
            *hess += gram * scale;
        }
    }

    /// `obj(β + step) − obj(β)` without forming both values.
    fn increment(&self, beta: &DVector<f64>, step: &DVector<f64>) -> f64 {
        match self {
            Objective::Linear(q) => q.dot(step),
            Objective::LeastSquares { map, target, .. } => {
                let residual = *map * beta - *target;
                let moved = *map * step;
                2.0 * residual.dot(&moved) + moved.norm_squared()
            }
        }
    }
}

/// Barrier of a region: value, gradient and Hessian at strictly interior
/// points, `None` elsewhere.
pub(crate) trait Barrier {
    fn value(&self, beta: &DVector<f64>) -> Option<f64>;
    fn derivatives(&self, beta: &DVector<f64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)>;
    /// Number of inequality terms, which sets the `m / t` suboptimality bound.
    fn num_constraints(&self) -> usize;
}

/// Largest squared Newton decrement at which a stalled line search still
/// counts as centered. At large `t` the least-squares Hessian `2tMᵀM` is
/// rank deficient and badly conditioned, so Newton directions lose accuracy
/// long before the decrement gets small; stopping with decrement `λ` costs
/// about `λ²/2t` in the objective, far below the `m / t` of the stage.
const STALL_DECREMENT: f64 = 0.25;

/// Largest `m / t` bound at which a partially completed stage schedule is
/// still returned as a solution.
const ACCEPTABLE_GAP: f64 = 1e-8;

fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = hess.clone().cholesky() {
        return Some(chol.solve(&(-grad)));
    }
    // Near-singular Hessians appear when the least-squares Gram matrix
    // dominates; a diagonal-relative ridge restores definiteness.
    let scale = hess.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut ridge = 1e-14 * scale;
    for _ in 0..12 {
        let mut regularized = hess.clone();
        for i in 0..regularized.nrows() {
            regularized[(i, i)] += ridge;
        }
        if let Some(chol) = regularized.cholesky() {
            return Some(chol.solve(&(-grad)));
        }
        ridge *= 100.0;
    }
    None
}

/// Newton's method on `t·obj + B` from a strictly feasible `beta`.
fn center(
    objective: &Objective<'_>,
    barrier: &dyn Barrier,
    beta: &mut DVector<f64>,
    t: f64,
    config: &BarrierConfig,
) -> Result<(), String> {
    let mut previous_decrement = f64::INFINITY;
    for _ in 0..config.max_newton_steps {
        let (b_now, b_grad, mut hess) = barrier
            .derivatives(beta)
            .ok_or("iterate left the interior")?;
        let grad = objective.gradient(beta) * t + b_grad;
        objective.add_hessian(t, &mut hess);
        let step = newton_direction(&hess, &grad).ok_or("singular Newton system")?;
        let slope = grad.dot(&step);
        let decrement_sq = -slope;
        if !decrement_sq.is_finite() {
            return Err("non-finite Newton decrement".into());
        }
        if decrement_sq / 2.0 <= config.newton_tolerance {
            return Ok(());
        }
        // Once the slack in the constraint is down to ~1/t, rounding in it
        // puts a floor under the decrement. A small decrement that has
        // stopped shrinking quadratically is centered as far as f64 allows.
        if decrement_sq < 1e-5 && decrement_sq > 0.25 * previous_decrement {
            return Ok(());
        }
        previous_decrement = decrement_sq;

        let mut s = 1.0;
        loop {
            let trial_step = &step * s;
            let trial = &*beta + &trial_step;
            if let Some(b_trial) = barrier.value(&trial) {
                let change = t * objective.increment(beta, &trial_step) + (b_trial - b_now);
                if change <= 0.25 * s * slope {
                    *beta = trial;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-16 {
                return if decrement_sq <= STALL_DECREMENT {
                    Ok(())
                } else {
                    Err("line search stalled".into())
                };
            }
        }
    }
    Err("Newton step limit reached".into())
}

/// Runs the barrier stages from a strictly feasible `start`.
///
/// If a late stage fails numerically, the last centered iterate is returned
/// provided its `m / t` suboptimality bound is at most [`ACCEPTABLE_GAP`].
pub(crate) fn minimize(
    objective: &Objective<'_>,
    barrier: &dyn Barrier,
    start: DVector<f64>,
    config: &BarrierConfig,
) -> Result<DVector<f64>, RegionError> {
    if barrier.value(&start).is_none() {
        return Err(RegionError::InfeasibleStart);
    }
    let m = barrier.num_constraints() as f64;
    let mut beta = start;
    let mut t = config.initial_weight;
    let mut centered: Option<(DVector<f64>, f64)> = None;

    for stage in 0..config.stages {
        if let Err(why) = center(objective, barrier, &mut beta, t, config) {
            return match centered {
                Some((best, weight)) if m / weight <= ACCEPTABLE_GAP => Ok(best),
                _ => Err(RegionError::NonConvergence {
                    best: beta,
                    detail: format!("{why} in stage {stage}"),
                }),
            };
        }
        centered = Some((beta.clone(), t));
        t *= config.multiplier;
    }
    Ok(beta)
}
