//! The decision space `C = {c ⪰ 0, Σcᵢ ≤ B}`, optionally cut by the
//! expected-outcome floor `cᵀAβ̂ ≥ φ`.

use std::cmp::Ordering;

use nalgebra::DVector;
use thiserror::Error;

use crate::model::OutcomeMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("need at least one channel")]
    NoChannels,
    #[error("floor {phi} exceeds the best attainable expected outcome {best}")]
    InfeasibleFloor { phi: f64, best: f64 },
    #[error("best response is only defined on the budget simplex without a floor")]
    FloorPresent,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
}

/// Half-space `{c : aᵀc ≥ φ}` with `a = Aβ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Floor {
    direction: DVector<f64>,
    phi: f64,
}

impl Floor {
    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    fn tolerance(&self) -> f64 {
        1e-12 * (1.0 + self.phi.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSpace {
    n: usize,
    budget: f64,
    floor: Option<Floor>,
}

impl DecisionSpace {
    pub fn simplex(n: usize, budget: f64) -> Result<Self, DecisionError> {
        if n == 0 {
            return Err(DecisionError::NoChannels);
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(DecisionError::InvalidBudget(budget));
        }
        Ok(DecisionSpace {
            n,
            budget,
            floor: None,
        })
    }

    /// Intersects the budget simplex with `{c : cᵀAβ̂ ≥ φ}`. Rejects floors
    /// above `h(β̂)`, where the intersection would be empty.
    pub fn with_floor(
        &self,
        beta_hat: &DVector<f64>,
        a: &OutcomeMatrix,
        phi: f64,
    ) -> Result<Self, DecisionError> {
        self.check_dim(a.num_channels())?;
        let direction = a.apply(beta_hat);
        let best = self.budget * direction.max().max(0.0);
        let floor = Floor { direction, phi };
        if phi > best + floor.tolerance() {
            return Err(DecisionError::InfeasibleFloor { phi, best });
        }
        Ok(DecisionSpace {
            n: self.n,
            budget: self.budget,
            floor: Some(floor),
        })
    }

    /// The same budget simplex with any floor dropped.
    pub fn without_floor(&self) -> Self {
        DecisionSpace {
            n: self.n,
            budget: self.budget,
            floor: None,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.n
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn floor(&self) -> Option<&Floor> {
        self.floor.as_ref()
    }

    /// Membership within `tol` on every constraint.
    pub fn contains(&self, c: &DVector<f64>, tol: f64) -> bool {
        c.len() == self.n
            && c.iter().all(|&v| v >= -tol)
            && c.sum() <= self.budget + tol
            && self
                .floor
                .as_ref()
                .is_none_or(|f| f.direction.dot(c) >= f.phi - tol)
    }

    /// Euclidean projection onto `C`.
    ///
    /// Without a floor this is the sort-and-threshold simplex projection.
    /// With a floor, the multiplier `λ ≥ 0` of the half-space is found by
    /// bisection: `P_C(x) = P_Δ(x + λa)` for the smallest `λ` whose
    /// projection meets the floor, and `aᵀP_Δ(x + λa)` is nondecreasing in `λ`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>, DecisionError> {
        self.check_dim(x.len())?;
        let Some(floor) = &self.floor else {
            return Ok(project_budget_simplex(x, self.budget));
        };
        let a = &floor.direction;
        let target = floor.phi - floor.tolerance();
        let at = |lambda: f64| project_budget_simplex(&(x + a * lambda), self.budget);

        let base = at(0.0);
        if a.dot(&base) >= target {
            return Ok(base);
        }
        let scale = (x.amax() + self.budget) / a.amax().max(f64::MIN_POSITIVE);
        let mut lo = 0.0;
        let mut hi = scale;
        let mut c_hi = at(hi);
        while a.dot(&c_hi) < target {
            lo = hi;
            hi *= 2.0;
            c_hi = at(hi);
            // Unreachable for a nonempty space: large λ concentrates the
            // budget on the best channel, which attains h(β̂) ≥ φ.
            assert!(hi.is_finite(), "floor projection diverged");
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let c_mid = at(mid);
            if a.dot(&c_mid) >= target {
                hi = mid;
                c_hi = c_mid;
            } else {
                lo = mid;
            }
        }
        Ok(c_hi)
    }

    /// Uniform allocation of the whole budget, projected onto `C`.
    pub fn uniform_start(&self) -> DVector<f64> {
        let x = DVector::from_element(self.n, self.budget / self.n as f64);
        self.project(&x).expect("dimension matches by construction")
    }

    fn check_dim(&self, len: usize) -> Result<(), DecisionError> {
        if len != self.n {
            return Err(DecisionError::Dimension {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Projection onto `{c ⪰ 0, Σc ≤ budget}`.
pub fn project_budget_simplex(x: &DVector<f64>, budget: f64) -> DVector<f64> {
    let clipped = x.map(|v| v.max(0.0));
    if clipped.sum() <= budget {
        return clipped;
    }
    // Water-filling onto {c ⪰ 0, Σc = budget}.
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - budget) / (k + 1) as f64;
        if v - candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    x.map(|v| (v - threshold).max(0.0))
}

/// `h(β) = max_{c∈C} cᵀAβ` and a maximizer, all budget on the best channel
/// (lowest index on ties) or nothing when every channel loses.
pub fn best_response_value(
    space: &DecisionSpace,
    beta: &DVector<f64>,
    a: &OutcomeMatrix,
) -> Result<(f64, DVector<f64>), DecisionError> {
    if space.floor.is_some() {
        return Err(DecisionError::FloorPresent);
    }
    space.check_dim(a.num_channels())?;
    if beta.len() != a.num_params() {
        return Err(DecisionError::Dimension {
            expected: a.num_params(),
            actual: beta.len(),
        });
    }
    let per_unit = a.apply(beta);
    let (best, value) = per_unit
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let mut c = DVector::zeros(space.n);
    if value > 0.0 {
        c[best] = space.budget;
        Ok((space.budget * value, c))
    } else {
        Ok((0.0, c))
    }
}

/// `c₀ = argmax_{c∈C} cᵀAβ̂`, the allocation that ignores uncertainty.
pub fn naive_optimal(
    space: &DecisionSpace,
    beta_hat: &DVector<f64>,
    a: &OutcomeMatrix,
) -> Result<DVector<f64>, DecisionError> {
    best_response_value(space, beta_hat, a).map(|(_, c)| c)
}
