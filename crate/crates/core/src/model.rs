//! Lift-study data, the outcome matrix and the binomial likelihood.
//!
//! Parameters are laid out interleaved per channel:
//! `β = [β₁ᴴ, β₁ᴹ, β₂ᴴ, β₂ᴹ, …]`, holdout before marketing. Row `i` of the
//! outcome matrix therefore touches only columns `2i` and `2i + 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a lift study needs at least one channel")]
    NoChannels,
    #[error("budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("channel {channel}: cost must be positive and finite, got {cost}")]
    InvalidCost { channel: usize, cost: f64 },
    #[error("channel {channel}: {group} group has {successes} successes out of {trials} trials")]
    InvalidCounts {
        channel: usize,
        group: &'static str,
        successes: u64,
        trials: u64,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("parameter {index} = {value} lies outside [0, 1]")]
    OutOfUnitBox { index: usize, value: f64 },
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("degrees of freedom must be at least 1")]
    InvalidDof,
}

/// Binomial outcomes of one channel's lift study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelData {
    pub trials_holdout: u64,
    pub successes_holdout: u64,
    pub trials_marketing: u64,
    pub successes_marketing: u64,
    /// Resource units needed to reach one person.
    pub cost: f64,
}

impl ChannelData {
    pub fn holdout_rate(&self) -> f64 {
        self.successes_holdout as f64 / self.trials_holdout as f64
    }

    pub fn marketing_rate(&self) -> f64 {
        self.successes_marketing as f64 / self.trials_marketing as f64
    }

    fn validate(&self, channel: usize) -> Result<(), ModelError> {
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(ModelError::InvalidCost {
                channel,
                cost: self.cost,
            });
        }
        for (group, s, t) in [
            ("holdout", self.successes_holdout, self.trials_holdout),
            ("marketing", self.successes_marketing, self.trials_marketing),
        ] {
            if t == 0 || s > t {
                return Err(ModelError::InvalidCounts {
                    channel,
                    group,
                    successes: s,
                    trials: t,
                });
            }
        }
        Ok(())
    }
}

/// Per-channel trial data plus the total budget `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftStudy {
    pub channels: Vec<ChannelData>,
    pub budget: f64,
}

impl LiftStudy {
    pub fn new(channels: Vec<ChannelData>, budget: f64) -> Result<Self, ModelError> {
        let study = LiftStudy { channels, budget };
        study.validate()?;
        Ok(study)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.channels.is_empty() {
            return Err(ModelError::NoChannels);
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(ModelError::InvalidBudget(self.budget));
        }
        for (i, ch) in self.channels.iter().enumerate() {
            ch.validate(i)?;
        }
        Ok(())
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Length of the parameter vector, `2n`.
    pub fn num_params(&self) -> usize {
        2 * self.channels.len()
    }

    /// `(successes, trials)` for each of the `2n` groups, in parameter order.
    pub fn group_counts(&self) -> Vec<(u64, u64)> {
        self.channels
            .iter()
            .flat_map(|ch| {
                [
                    (ch.successes_holdout, ch.trials_holdout),
                    (ch.successes_marketing, ch.trials_marketing),
                ]
            })
            .collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.channels.iter().map(|ch| ch.cost).collect()
    }
}

/// The `n × 2n` matrix mapping conversion rates to per-unit incremental
/// outcomes: row `i` holds `−1/ρᵢ` at column `2i` and `+1/ρᵢ` at `2i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeMatrix {
    matrix: DMatrix<f64>,
}

impl OutcomeMatrix {
    pub fn from_costs(costs: &[f64]) -> Result<Self, ModelError> {
        if costs.is_empty() {
            return Err(ModelError::NoChannels);
        }
        let n = costs.len();
        let mut matrix = DMatrix::zeros(n, 2 * n);
        for (i, &cost) in costs.iter().enumerate() {
            if !(cost.is_finite() && cost > 0.0) {
                return Err(ModelError::InvalidCost { channel: i, cost });
            }
            matrix[(i, 2 * i)] = -1.0 / cost;
            matrix[(i, 2 * i + 1)] = 1.0 / cost;
        }
        Ok(OutcomeMatrix { matrix })
    }

    pub fn num_channels(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `Aβ`, the per-unit outcome of each channel under `beta`.
    pub fn apply(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.matrix * beta
    }

    /// `Aᵀc`, the linear functional on parameters induced by a decision.
    pub fn apply_transpose(&self, c: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(c)
    }

    /// Largest singular value, by power iteration on `AᵀA`.
    pub fn spectral_norm_estimate(&self, iterations: usize) -> f64 {
        // The constant vector lies in the null space of A; start off it.
        let m = self.num_params();
        let mut x = DVector::from_fn(m, |j, _| (j + 1) as f64);
        x.normalize_mut();
        let mut sigma_sq = 0.0;
        for _ in 0..iterations {
            let y = self.matrix.tr_mul(&(&self.matrix * &x));
            let norm = y.norm();
            if norm == 0.0 {
                return 0.0;
            }
            sigma_sq = x.dot(&y);
            x = y / norm;
        }
        sigma_sq.max(0.0).sqrt()
    }
}

pub fn build_outcome_matrix(study: &LiftStudy) -> Result<OutcomeMatrix, ModelError> {
    study.validate()?;
    OutcomeMatrix::from_costs(&study.costs())
}

/// `g(c; β) = cᵀAβ`.
pub fn expected_outcome(
    c: &DVector<f64>,
    beta: &DVector<f64>,
    a: &OutcomeMatrix,
) -> Result<f64, ModelError> {
    if c.len() != a.num_channels() {
        return Err(ModelError::Dimension {
            expected: a.num_channels(),
            actual: c.len(),
        });
    }
    if beta.len() != a.num_params() {
        return Err(ModelError::Dimension {
            expected: a.num_params(),
            actual: beta.len(),
        });
    }
    Ok(c.dot(&a.apply(beta)))
}

/// `s log p + (t − s) log(1 − p)` with `0·log 0 = 0`; `−∞` when the data
/// rule `p` out.
pub(crate) fn group_log_likelihood(successes: u64, trials: u64, p: f64) -> f64 {
    let s = successes as f64;
    let f = (trials - successes) as f64;
    let term = |count: f64, prob: f64| {
        if count == 0.0 {
            0.0
        } else if prob <= 0.0 {
            f64::NEG_INFINITY
        } else {
            count * prob.ln()
        }
    };
    term(s, p) + term(f, 1.0 - p)
}

/// Binomial log-likelihood summed over all `2n` groups.
pub fn log_likelihood(beta: &DVector<f64>, study: &LiftStudy) -> Result<f64, ModelError> {
    if beta.len() != study.num_params() {
        return Err(ModelError::Dimension {
            expected: study.num_params(),
            actual: beta.len(),
        });
    }
    let mut total = 0.0;
    for (index, (&p, (s, t))) in beta.iter().zip(study.group_counts()).enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::OutOfUnitBox { index, value: p });
        }
        total += group_log_likelihood(s, t, p);
    }
    Ok(total)
}

/// Maximum-likelihood conversion rates `sᵢ / tᵢ`.
pub fn mle(study: &LiftStudy) -> DVector<f64> {
    DVector::from_iterator(
        study.num_params(),
        study
            .group_counts()
            .into_iter()
            .map(|(s, t)| s as f64 / t as f64),
    )
}

/// Chi-square CDF through the regularized lower incomplete gamma function.
pub fn chi2_cdf(x: f64, dof: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(dof as f64 / 2.0, x / 2.0)
}

/// Quantile of the chi-square distribution, by bisection on [`chi2_cdf`].
pub fn chi2_quantile(prob: f64, dof: u32) -> Result<f64, ModelError> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(ModelError::InvalidProbability(prob));
    }
    if dof == 0 {
        return Err(ModelError::InvalidDof);
    }
    let mut lo = 0.0;
    let mut hi = dof as f64 + 10.0;
    while chi2_cdf(hi, dof) < prob {
        lo = hi;
        hi *= 2.0;
    }
    // Bisect until the bracket collapses to adjacent floats.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_cdf(mid, dof) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
