//! Random instances for property and acceptance tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use robust_alloc::{ChannelData, LiftStudy};

use crate::bisect;
use crate::region::OracleRegion;

/// A study with `n` channels whose counts look like a real lift test:
/// a few hundred trials, conversion rates of a few percent, occasionally
/// a group with no successes.
pub fn random_study<R: Rng>(rng: &mut R, n: usize) -> LiftStudy {
    let channels = (0..n)
        .map(|_| {
            let trials_holdout = rng.random_range(200..=500);
            let trials_marketing = rng.random_range(200..=500);
            let holdout: f64 = rng.random_range(0.005..0.1);
            let marketing: f64 = (holdout + rng.random_range(-0.01..0.05)).max(0.0);
            let draw = |t: u64, p: f64, rng: &mut R| (0..t).filter(|_| rng.random::<f64>() < p).count() as u64;
            ChannelData {
                trials_holdout,
                successes_holdout: draw(trials_holdout, holdout, rng),
                trials_marketing,
                successes_marketing: draw(trials_marketing, marketing, rng),
                cost: rng.random_range(0.5..2.0),
            }
        })
        .collect();
    LiftStudy::new(channels, 1.0).expect("generated counts are valid")
}

/// A random positive definite shape whose ellipsoid has semi-axes between
/// `min_axis` and `max_axis`, in a random orientation.
pub fn random_shape<R: Rng>(rng: &mut R, dim: usize, min_axis: f64, max_axis: f64) -> DMatrix<f64> {
    let gaussian = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let q = gaussian.qr().q();
    let eig = DVector::from_fn(dim, |_, _| {
        let axis: f64 = rng.random_range(min_axis..max_axis);
        1.0 / (axis * axis)
    });
    &q * DMatrix::from_diagonal(&eig) * q.transpose()
}

/// A uniformly random direction.
pub fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let d = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let norm = d.norm();
        if norm > 1e-3 && norm <= 1.0 {
            return d / norm;
        }
    }
}

/// A random point of `{c ⪰ 0, Σc ≤ budget}`, sometimes on a face.
pub fn random_decision<R: Rng>(rng: &mut R, n: usize, budget: f64) -> DVector<f64> {
    let weights = DVector::from_fn(n, |_, _| {
        if rng.random_bool(0.2) {
            0.0
        } else {
            -rng.random::<f64>().max(1e-300).ln()
        }
    });
    let total = weights.sum();
    if total == 0.0 {
        return weights;
    }
    let scale = if rng.random_bool(0.5) { 1.0 } else { rng.random::<f64>() };
    weights * (budget * scale / total)
}

/// A random member of `region`: a point a uniform fraction of the way
/// from a nearly central point to the boundary along a random ray.
pub fn random_member<R: Rng>(rng: &mut R, region: &OracleRegion) -> DVector<f64> {
    let center = region.center();
    let start = match region {
        OracleRegion::Ellipsoid { .. } => center,
        OracleRegion::Lr { .. } => center.map(|p| 0.999 * p + 0.0005),
    };
    let d = random_direction(rng, start.len());
    let mut hi = 1.0;
    while region.contains(&(&start + &d * hi), 0.0) {
        hi *= 2.0;
    }
    let edge = bisect(0.0, hi, |t| {
        if region.contains(&(&start + &d * t), 0.0) {
            -1.0
        } else {
            1.0
        }
    });
    let t = rng.random::<f64>() * edge * (1.0 - 1e-9);
    start + d * t
}
