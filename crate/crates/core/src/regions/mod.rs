//! Convex confidence regions for the parameter vector.
//!
//! Every solver needs three things from a region `S`: a membership test,
//! linear minimization over `S` (the worst-case parameters for a
//! decision), and the generalized projection `argmin_{β∈S} ‖Mβ − w‖²`
//! through a linear map `M`. Linear minimization over an ellipsoid has a
//! closed form; everything else goes through the log-barrier Newton solver
//! in [`barrier`].

mod barrier;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{self, LiftStudy, ModelError, OutcomeMatrix};
use barrier::{Barrier, Objective};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("shape matrix must be symmetric positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("confidence level alpha must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("no strictly feasible starting point in the region")]
    InfeasibleStart,
    #[error("barrier solver did not converge: {detail}")]
    NonConvergence { best: DVector<f64>, detail: String },
}

/// Tuning of the log-barrier interior-point solver.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierConfig {
    /// Barrier weight `t₀` of the first stage.
    pub initial_weight: f64,
    /// Factor `μ > 1` applied to `t` after each stage.
    pub multiplier: f64,
    /// Stop a stage when half the squared Newton decrement drops below this.
    pub newton_tolerance: f64,
    pub max_newton_steps: usize,
    pub stages: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig {
            initial_weight: 1.0,
            multiplier: 20.0,
            newton_tolerance: 1e-10,
            max_newton_steps: 100,
            stages: 12,
        }
    }
}

/// `{β : (β − β̂)ᵀP(β − β̂) ≤ 1}`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    shape_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Ellipsoid {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self, RegionError> {
        let m = center.len();
        if shape.nrows() != m || shape.ncols() != m {
            return Err(RegionError::Dimension {
                expected: m,
                actual: shape.nrows(),
            });
        }
        let scale = shape.amax().max(1.0);
        if (&shape - shape.transpose()).amax() > 1e-12 * scale {
            return Err(RegionError::NotPositiveDefinite);
        }
        let shape_chol = shape
            .clone()
            .cholesky()
            .ok_or(RegionError::NotPositiveDefinite)?;
        Ok(Ellipsoid {
            center,
            shape,
            shape_chol,
        })
    }

    /// Normal approximation to the binomial likelihood-ratio region: the
    /// diagonal Fisher information scaled by the same χ² radius. Rates at
    /// 0 or 1 are clamped half a count inside the box.
    pub fn fisher(study: &LiftStudy, alpha: f64) -> Result<Self, RegionError> {
        study.validate()?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(RegionError::InvalidLevel(alpha));
        }
        let radius = model::chi2_quantile(1.0 - alpha, study.num_params() as u32)?;
        let center = model::mle(study);
        let info = study.group_counts().into_iter().map(|(s, t)| {
            let t = t as f64;
            let p = (s as f64).clamp(0.5, t - 0.5) / t;
            t / (p * (1.0 - p)) / radius
        });
        let shape = DMatrix::from_diagonal(&DVector::from_iterator(study.num_params(), info));
        Ellipsoid::new(center, shape)
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// `P⁻¹x`.
    pub fn solve_shape(&self, x: &DVector<f64>) -> DVector<f64> {
        self.shape_chol.solve(x)
    }

    /// `(β − β̂)ᵀP(β − β̂)`.
    pub fn mahalanobis_sq(&self, beta: &DVector<f64>) -> f64 {
        let d = beta - &self.center;
        d.dot(&(&self.shape * &d))
    }

    /// `argmin_{β∈S} qᵀβ = β̂ − P⁻¹q / √(qᵀP⁻¹q)`.
    pub fn linear_minimizer(&self, q: &DVector<f64>) -> DVector<f64> {
        let pinv_q = self.solve_shape(q);
        let norm = q.dot(&pinv_q).max(0.0).sqrt();
        if norm == 0.0 {
            return self.center.clone();
        }
        &self.center - pinv_q / norm
    }
}

impl Barrier for Ellipsoid {
    fn value(&self, beta: &DVector<f64>) -> Option<f64> {
        let slack = 1.0 - self.mahalanobis_sq(beta);
        (slack > 0.0).then(|| -slack.ln())
    }

    fn derivatives(&self, beta: &DVector<f64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let d = beta - &self.center;
        let pd = &self.shape * &d;
        let slack = 1.0 - d.dot(&pd);
        if slack <= 0.0 {
            return None;
        }
        // φ = dᵀPd − 1, ∇φ = 2Pd, ∇²φ = 2P
        let grad = &pd * (2.0 / slack);
        let hess = &grad * grad.transpose() + &self.shape * (2.0 / slack);
        Some((-slack.ln(), grad, hess))
    }

    fn num_constraints(&self) -> usize {
        1
    }
}

/// `{β ∈ [0,1]^{2n} : 2(ℓ(β̂) − ℓ(β)) ≤ χ²_{1−α, 2n}}`.
#[derive(Debug, Clone)]
pub struct BinomialLr {
    counts: Vec<(u64, u64)>,
    mle: DVector<f64>,
    alpha: f64,
    radius: f64,
    max_log_likelihood: f64,
}

/// Nudge applied to boundary MLE coordinates to get an interior start.
const BOUNDARY_SHRINK: f64 = 1e-4;

impl BinomialLr {
    pub fn new(study: &LiftStudy, alpha: f64) -> Result<Self, RegionError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(RegionError::InvalidLevel(alpha));
        }
        study.validate()?;
        let radius = model::chi2_quantile(1.0 - alpha, study.num_params() as u32)?;
        let mle = model::mle(study);
        let max_log_likelihood = model::log_likelihood(&mle, study)?;
        Ok(BinomialLr {
            counts: study.group_counts(),
            mle,
            alpha,
            radius,
            max_log_likelihood,
        })
    }

    pub fn mle(&self) -> &DVector<f64> {
        &self.mle
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn max_log_likelihood(&self) -> f64 {
        self.max_log_likelihood
    }

    /// Likelihood-ratio statistic `2(ℓ(β̂) − ℓ(β))`, summed group by group
    /// as `2[s log(p̂/β) + (t−s) log((1−p̂)/(1−β))]` to avoid cancellation.
    /// Infinite when `β` is outside the box or ruled out by the data.
    pub fn statistic(&self, beta: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        for ((&s, &t), (&p, &hat)) in self
            .counts
            .iter()
            .map(|(s, t)| (s, t))
            .zip(beta.iter().zip(self.mle.iter()))
        {
            if !(0.0..=1.0).contains(&p) {
                return f64::INFINITY;
            }
            let succ = s as f64;
            let fail = (t - s) as f64;
            if succ > 0.0 {
                if p == 0.0 {
                    return f64::INFINITY;
                }
                total += succ * (hat / p).ln();
            }
            if fail > 0.0 {
                if p == 1.0 {
                    return f64::INFINITY;
                }
                total += fail * ((1.0 - hat) / (1.0 - p)).ln();
            }
        }
        2.0 * total
    }

    fn interior_start(&self) -> Result<DVector<f64>, RegionError> {
        let start = self.mle.map(|p| {
            if p <= 0.0 {
                BOUNDARY_SHRINK
            } else if p >= 1.0 {
                1.0 - BOUNDARY_SHRINK
            } else {
                p
            }
        });
        if self.statistic(&start) < self.radius {
            Ok(start)
        } else {
            Err(RegionError::InfeasibleStart)
        }
    }
}

impl Barrier for BinomialLr {
    fn value(&self, beta: &DVector<f64>) -> Option<f64> {
        if beta.iter().any(|&p| p <= 0.0 || p >= 1.0) {
            return None;
        }
        let slack = self.radius - self.statistic(beta);
        if slack <= 0.0 {
            return None;
        }
        let box_terms: f64 = beta.iter().map(|&p| -(p.ln() + (1.0 - p).ln())).sum();
        Some(-slack.ln() + box_terms)
    }

    fn derivatives(&self, beta: &DVector<f64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let value = self.value(beta)?;
        let m = beta.len();
        let slack = self.radius - self.statistic(beta);
        let mut stat_grad = DVector::zeros(m);
        let mut stat_curv = DVector::zeros(m);
        let mut box_grad = DVector::zeros(m);
        let mut box_curv = DVector::zeros(m);
        for (j, (&(s, t), &p)) in self.counts.iter().zip(beta.iter()).enumerate() {
            let succ = s as f64;
            let fail = (t - s) as f64;
            let q = 1.0 - p;
            stat_grad[j] = 2.0 * (-succ / p + fail / q);
            stat_curv[j] = 2.0 * (succ / (p * p) + fail / (q * q));
            box_grad[j] = -1.0 / p + 1.0 / q;
            box_curv[j] = 1.0 / (p * p) + 1.0 / (q * q);
        }
        // −log(r − stat): ∇ = ∇stat / slack, ∇² = ∇stat∇statᵀ/slack² + ∇²stat/slack
        let grad = &stat_grad / slack + box_grad;
        let mut hess = &stat_grad * stat_grad.transpose() / (slack * slack);
        for j in 0..m {
            hess[(j, j)] += stat_curv[j] / slack + box_curv[j];
        }
        Some((value, grad, hess))
    }

    fn num_constraints(&self) -> usize {
        1 + 2 * self.counts.len()
    }
}

/// A convex confidence region for the parameter vector.
#[derive(Debug, Clone)]
pub enum ConfidenceRegion {
    Ellipsoid(Ellipsoid),
    BinomialLr(BinomialLr),
}

/// Worst-case parameters for a decision and the resulting outcome `f(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub beta: DVector<f64>,
    pub value: f64,
}

impl From<Ellipsoid> for ConfidenceRegion {
    fn from(e: Ellipsoid) -> Self {
        ConfidenceRegion::Ellipsoid(e)
    }
}

impl From<BinomialLr> for ConfidenceRegion {
    fn from(r: BinomialLr) -> Self {
        ConfidenceRegion::BinomialLr(r)
    }
}

impl ConfidenceRegion {
    pub fn dim(&self) -> usize {
        self.center().len()
    }

    /// The point estimate `β̂` the region is built around.
    pub fn center(&self) -> &DVector<f64> {
        match self {
            ConfidenceRegion::Ellipsoid(e) => e.center(),
            ConfidenceRegion::BinomialLr(r) => r.mle(),
        }
    }

    pub fn is_ellipsoid(&self) -> bool {
        matches!(self, ConfidenceRegion::Ellipsoid(_))
    }

    /// Membership with `slack` added to the right-hand side of the defining
    /// inequality. The unit box of the likelihood-ratio region is exact.
    pub fn contains(&self, beta: &DVector<f64>, slack: f64) -> bool {
        if beta.len() != self.dim() || beta.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ConfidenceRegion::Ellipsoid(e) => e.mahalanobis_sq(beta) <= 1.0 + slack,
            ConfidenceRegion::BinomialLr(r) => {
                beta.iter().all(|p| (0.0..=1.0).contains(p)) && r.statistic(beta) <= r.radius + slack
            }
        }
    }

    fn barrier(&self) -> &dyn Barrier {
        match self {
            ConfidenceRegion::Ellipsoid(e) => e,
            ConfidenceRegion::BinomialLr(r) => r,
        }
    }

    fn interior_start(&self) -> Result<DVector<f64>, RegionError> {
        match self {
            ConfidenceRegion::Ellipsoid(e) => Ok(e.center().clone()),
            ConfidenceRegion::BinomialLr(r) => r.interior_start(),
        }
    }

    /// `argmin_{β∈S} qᵀβ`. Ties (only possible for `q = 0`) return the
    /// interior start.
    pub fn linear_minimizer(
        &self,
        q: &DVector<f64>,
        config: &BarrierConfig,
    ) -> Result<DVector<f64>, RegionError> {
        self.check_dim(q.len())?;
        if q.iter().all(|&v| v == 0.0) {
            return self.interior_start();
        }
        match self {
            ConfidenceRegion::Ellipsoid(e) => Ok(e.linear_minimizer(q)),
            ConfidenceRegion::BinomialLr(r) => {
                barrier::minimize(&Objective::Linear(q), r, r.interior_start()?, config)
            }
        }
    }

    /// `f(c) = min_{β∈S} cᵀAβ` together with a minimizer.
    pub fn worst_case_params(
        &self,
        c: &DVector<f64>,
        a: &OutcomeMatrix,
    ) -> Result<WorstCase, RegionError> {
        self.worst_case_params_with(c, a, &BarrierConfig::default())
    }

    pub fn worst_case_params_with(
        &self,
        c: &DVector<f64>,
        a: &OutcomeMatrix,
        config: &BarrierConfig,
    ) -> Result<WorstCase, RegionError> {
        if c.len() != a.num_channels() {
            return Err(RegionError::Dimension {
                expected: a.num_channels(),
                actual: c.len(),
            });
        }
        let q = a.apply_transpose(c);
        let beta = self.linear_minimizer(&q, config)?;
        let value = q.dot(&beta);
        Ok(WorstCase { beta, value })
    }

    /// `argmin_{β∈S} ‖Mβ − w‖²` for an arbitrary linear map `M`.
    ///
    /// `M` is usually rank deficient (fewer outcomes than parameters), in
    /// which case the minimizer is not unique; the barrier solver returns
    /// the one nearest the analytic center of the solution set.
    pub fn generalized_projection(
        &self,
        map: &DMatrix<f64>,
        w: &DVector<f64>,
    ) -> Result<DVector<f64>, RegionError> {
        self.generalized_projection_with(map, w, &BarrierConfig::default())
    }

    pub fn generalized_projection_with(
        &self,
        map: &DMatrix<f64>,
        w: &DVector<f64>,
        config: &BarrierConfig,
    ) -> Result<DVector<f64>, RegionError> {
        self.check_dim(map.ncols())?;
        if w.len() != map.nrows() {
            return Err(RegionError::Dimension {
                expected: map.nrows(),
                actual: w.len(),
            });
        }
        let objective = Objective::least_squares(map, w);
        barrier::minimize(&objective, self.barrier(), self.interior_start()?, config)
    }

    /// Upper bound on the objective suboptimality left by the barrier solver.
    pub fn barrier_gap_bound(&self, config: &BarrierConfig) -> f64 {
        let final_weight =
            config.initial_weight * config.multiplier.powi(config.stages.saturating_sub(1) as i32);
        self.barrier().num_constraints() as f64 / final_weight
    }

    fn check_dim(&self, len: usize) -> Result<(), RegionError> {
        if len != self.dim() {
            return Err(RegionError::Dimension {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }
}
