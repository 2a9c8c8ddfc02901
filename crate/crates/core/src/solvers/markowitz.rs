//! Closed-form worst case over an ellipsoid.
//!
//! For `S = {(β − β̂)ᵀP(β − β̂) ≤ 1}` the inner minimum is explicit,
//! `f(c) = cᵀAβ̂ − ‖P^{−1/2}Aᵀc‖₂`, so the robust problem is a second-order
//! cone program. It is solved here by accelerated projected ascent on the
//! explicit objective; no inner solves are needed.

use nalgebra::{DMatrix, DVector};

use super::{Problem, SolveError, SolveResult, SolveStatus};
use crate::model::OutcomeMatrix;
use crate::regions::{ConfidenceRegion, Ellipsoid, WorstCase};

const MAX_ITERATIONS: usize = 200_000;
const STEP_TOLERANCE: f64 = 1e-14;

struct ClosedForm {
    /// `Aβ̂`
    mean: DVector<f64>,
    /// `AP⁻¹Aᵀ`
    spread: DMatrix<f64>,
}

impl ClosedForm {
    fn new(a: &OutcomeMatrix, ellipsoid: &Ellipsoid) -> Self {
        let mean = a.apply(ellipsoid.center());
        let at = a.matrix().transpose();
        let pinv_at = DMatrix::from_columns(
            &at.column_iter()
                .map(|col| ellipsoid.solve_shape(&col.into_owned()))
                .collect::<Vec<_>>(),
        );
        let spread = a.matrix() * pinv_at;
        ClosedForm { mean, spread }
    }

    fn value(&self, c: &DVector<f64>) -> f64 {
        self.mean.dot(c) - c.dot(&(&self.spread * c)).max(0.0).sqrt()
    }

    fn gradient(&self, c: &DVector<f64>) -> DVector<f64> {
        let mc = &self.spread * c;
        let norm = c.dot(&mc).max(0.0).sqrt();
        if norm == 0.0 {
            self.mean.clone()
        } else {
            &self.mean - mc / norm
        }
    }
}

/// `f(c) = cᵀAβ̂ − ‖P^{−1/2}Aᵀc‖₂`.
pub fn markowitz_objective(
    a: &OutcomeMatrix,
    ellipsoid: &Ellipsoid,
    c: &DVector<f64>,
) -> f64 {
    ClosedForm::new(a, ellipsoid).value(c)
}

pub fn markowitz_solve(problem: &Problem<'_>) -> Result<SolveResult, SolveError> {
    let ConfidenceRegion::Ellipsoid(ellipsoid) = problem.region else {
        return Err(SolveError::NotEllipsoidal);
    };
    let form = ClosedForm::new(problem.a, ellipsoid);
    let space = problem.space;

    let mut x = space.uniform_start();
    let mut fx = form.value(&x);
    let mut z = x.clone();
    let mut theta = 1.0f64;
    let mut step = 1.0;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;

    for k in 1..=MAX_ITERATIONS {
        iterations = k;
        let fz = form.value(&z);
        let grad = form.gradient(&z);
        step *= 1.5;
        let (candidate, fc) = loop {
            let candidate = space.project(&(&z + &grad * step))?;
            let d = &candidate - &z;
            let fc = form.value(&candidate);
            let model = fz + grad.dot(&d) - d.norm_squared() / (2.0 * step);
            if fc >= model - 1e-15 * (1.0 + model.abs()) || step < 1e-300 {
                break (candidate, fc);
            }
            step *= 0.5;
        };
        let moved = (&candidate - &z).norm();
        if fc < fx {
            theta = 1.0;
            z = x.clone();
        } else {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            z = &candidate + (&candidate - &x) * ((theta - 1.0) / theta_next);
            theta = theta_next;
            x = candidate;
            fx = fc;
        }
        if moved <= STEP_TOLERANCE * (1.0 + x.norm()) {
            status = SolveStatus::Converged;
            break;
        }
    }

    // The objective is nonsmooth only at the origin; compare against it.
    let zero = DVector::zeros(space.num_channels());
    if space.contains(&zero, 0.0) && fx < 0.0 {
        x = zero;
    }
    let beta = ellipsoid.linear_minimizer(&problem.a.apply_transpose(&x));
    let value = problem.a.apply_transpose(&x).dot(&beta);
    Ok(SolveResult::at(
        problem,
        x,
        WorstCase { beta, value },
        status,
        iterations,
    ))
}
