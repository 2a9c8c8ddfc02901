//! Confidence regions rebuilt from raw counts, with linear minimization by
//! closed form (ellipsoid) or Lagrangian dual decomposition (likelihood
//! ratio), and the proximal operator by direct minimization.

use nalgebra::{DMatrix, DVector};
use robust_alloc::LiftStudy;

use crate::{bisect, chi2, golden_min};

#[derive(Debug, Clone)]
pub enum OracleRegion {
    Ellipsoid {
        center: DVector<f64>,
        shape: DMatrix<f64>,
    },
    Lr {
        counts: Vec<(f64, f64)>,
        radius: f64,
    },
}

fn group_ll(s: f64, f: f64, p: f64) -> f64 {
    let term = |n: f64, q: f64| if n == 0.0 { 0.0 } else { n * q.ln() };
    term(s, p) + term(f, 1.0 - p)
}

impl OracleRegion {
    /// Likelihood-ratio region at level `alpha`, radius from quadrature.
    pub fn lr(study: &LiftStudy, alpha: f64) -> Self {
        let counts = study
            .channels
            .iter()
            .flat_map(|ch| {
                [
                    (ch.successes_holdout, ch.trials_holdout),
                    (ch.successes_marketing, ch.trials_marketing),
                ]
            })
            .map(|(s, t)| (s as f64, (t - s) as f64))
            .collect::<Vec<_>>();
        let radius = chi2::quantile(1.0 - alpha, counts.len() as u32);
        OracleRegion::Lr { counts, radius }
    }

    pub fn ellipsoid(center: DVector<f64>, shape: DMatrix<f64>) -> Self {
        OracleRegion::Ellipsoid { center, shape }
    }

    pub fn center(&self) -> DVector<f64> {
        match self {
            OracleRegion::Ellipsoid { center, .. } => center.clone(),
            OracleRegion::Lr { counts, .. } => {
                DVector::from_iterator(counts.len(), counts.iter().map(|(s, f)| s / (s + f)))
            }
        }
    }

    /// `2(ℓ(β̂) − ℓ(β))`, or the Mahalanobis form for an ellipsoid; `∞`
    /// outside the unit box for the likelihood-ratio region.
    pub fn statistic(&self, beta: &DVector<f64>) -> f64 {
        match self {
            OracleRegion::Ellipsoid { center, shape } => {
                let d = beta - center;
                d.dot(&(shape * &d))
            }
            OracleRegion::Lr { counts, .. } => {
                let mut total = 0.0;
                for (&(s, f), &p) in counts.iter().zip(beta.iter()) {
                    if !(0.0..=1.0).contains(&p) {
                        return f64::INFINITY;
                    }
                    let hat = s / (s + f);
                    let value = group_ll(s, f, hat) - group_ll(s, f, p);
                    if value.is_nan() {
                        return f64::INFINITY;
                    }
                    total += 2.0 * value;
                }
                total
            }
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            OracleRegion::Ellipsoid { .. } => 1.0,
            OracleRegion::Lr { radius, .. } => *radius,
        }
    }

    pub fn contains(&self, beta: &DVector<f64>, slack: f64) -> bool {
        self.statistic(beta) <= self.bound() + slack
    }

    /// `min_{β∈S} qᵀβ` and a minimizer.
    pub fn linear_min(&self, q: &DVector<f64>) -> (DVector<f64>, f64) {
        match self {
            OracleRegion::Ellipsoid { center, shape } => {
                let inv = shape.clone().try_inverse().expect("shape is positive definite");
                let pq = &inv * q;
                let norm = q.dot(&pq).sqrt();
                if norm == 0.0 {
                    return (center.clone(), 0.0);
                }
                let beta = center - pq / norm;
                let value = q.dot(center) - norm;
                (beta, value)
            }
            OracleRegion::Lr { counts, radius } => lr_linear_min(counts, *radius, q),
        }
    }

    /// `f̃(y) = max_{β∈S} −yᵀAβ`.
    pub fn ftilde(&self, a: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
        -self.linear_min(&a.tr_mul(y)).1
    }

    /// `f(c) = min_{β∈S} cᵀAβ`.
    pub fn worst_value(&self, a: &DMatrix<f64>, c: &DVector<f64>) -> f64 {
        self.linear_min(&a.tr_mul(c)).1
    }

    /// The proximal objective `f̃(y) + (ρ/2)‖y − v‖²`.
    pub fn prox_objective(&self, a: &DMatrix<f64>, rho: f64, v: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.ftilde(a, y) + 0.5 * rho * (y - v).norm_squared()
    }

    /// Proximal point of `f̃/ρ` at `v` by golden-section search over `y`,
    /// nested coordinate by coordinate. One or two channels only.
    ///
    /// The minimizer satisfies `y = v + Aβ/ρ` for some `β` in the unit box,
    /// so each coordinate lies within `max|Aᵢ·|·‖β‖₁/ρ` of `vᵢ`.
    pub fn prox(&self, a: &DMatrix<f64>, rho: f64, v: &DVector<f64>) -> DVector<f64> {
        let n = v.len();
        let reach = |i: usize| a.row(i).abs().sum() / rho + 1e-3;
        let objective = |y: &DVector<f64>| self.prox_objective(a, rho, v, y);
        match n {
            1 => {
                let (y, _) = golden_min(v[0] - reach(0), v[0] + reach(0), 1e-11, |t| {
                    objective(&DVector::from_element(1, t))
                });
                DVector::from_element(1, y)
            }
            2 => {
                let inner = |y0: f64| {
                    golden_min(v[1] - reach(1), v[1] + reach(1), 1e-10, |y1| {
                        objective(&DVector::from_column_slice(&[y0, y1]))
                    })
                };
                let (y0, _) = golden_min(v[0] - reach(0), v[0] + reach(0), 1e-10, |y0| inner(y0).1);
                DVector::from_column_slice(&[y0, inner(y0).0])
            }
            _ => panic!("prox oracle handles one or two channels"),
        }
    }
}

/// `argmin qᵀβ` over the likelihood-ratio region by dual decomposition.
///
/// For a multiplier `μ > 0` the Lagrangian `Σ qⱼβⱼ − μℓⱼ(βⱼ)` separates;
/// each coordinate solves `qⱼ = μ(sⱼ/β − fⱼ/(1 − β))` by bisection. The
/// statistic at the minimizer falls as `μ` grows, so a second bisection on
/// `log μ` makes the constraint tight.
fn lr_linear_min(counts: &[(f64, f64)], radius: f64, q: &DVector<f64>) -> (DVector<f64>, f64) {
    let coordinate = |j: usize, mu: f64| -> f64 {
        let (s, f) = counts[j];
        let qj = q[j];
        let slope = |p: f64| qj - mu * (s / p - f / (1.0 - p));
        if s == 0.0 && qj + mu * f >= 0.0 {
            return 0.0;
        }
        if f == 0.0 && qj - mu * s <= 0.0 {
            return 1.0;
        }
        bisect(0.0, 1.0, slope)
    };
    let solve = |mu: f64| DVector::from_iterator(q.len(), (0..q.len()).map(|j| coordinate(j, mu)));
    let statistic = |beta: &DVector<f64>| {
        counts
            .iter()
            .zip(beta.iter())
            .map(|(&(s, f), &p)| {
                let hat = s / (s + f);
                2.0 * (group_ll(s, f, hat) - group_ll(s, f, p))
            })
            .sum::<f64>()
    };
    // Work in log μ; the statistic is decreasing in it.
    let excess = |log_mu: f64| {
        let stat = statistic(&solve(log_mu.exp()));
        if stat.is_nan() {
            1.0
        } else {
            radius - stat
        }
    };
    let log_mu = bisect(-60.0, 60.0, excess);
    let beta = solve(log_mu.exp());
    let value = q.dot(&beta);
    (beta, value)
}
