//! Euclidean projections by enumeration, alternation and eigenvectors.

use nalgebra::{DMatrix, DVector};

/// Projection onto `{c ⪰ 0, Σc ≤ budget}` by trying every active set.
///
/// Each candidate fixes a set of zero coordinates and whether the budget
/// binds, then solves the resulting equality-constrained problem exactly.
/// The projection is one of the candidates, and no feasible candidate is
/// closer to `x`, so the closest feasible candidate is the projection.
/// Exponential in `n`; meant for `n ≤ 6`.
pub fn simplex_active_set(x: &DVector<f64>, budget: f64) -> DVector<f64> {
    let n = x.len();
    assert!(n <= 16, "active-set enumeration is exponential");
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        for budget_binds in [false, true] {
            let shift = if budget_binds {
                if free.is_empty() {
                    continue;
                }
                (free.iter().map(|&i| x[i]).sum::<f64>() - budget) / free.len() as f64
            } else {
                0.0
            };
            let mut c = DVector::zeros(n);
            for &i in &free {
                c[i] = x[i] - shift;
            }
            let feasible = c.iter().all(|&v| v >= -1e-12) && c.sum() <= budget + 1e-12;
            if !feasible {
                continue;
            }
            let dist = (&c - x).norm_squared();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, c));
            }
        }
    }
    best.expect("the origin is always a feasible candidate").1
}

fn project_half_space(x: &DVector<f64>, a: &DVector<f64>, phi: f64) -> DVector<f64> {
    let slack = a.dot(x) - phi;
    if slack >= 0.0 {
        x.clone()
    } else {
        x - a * (slack / a.norm_squared())
    }
}

/// Projection onto the budget simplex intersected with `{c : aᵀc ≥ φ}` by
/// Dykstra's alternating projections.
pub fn floor_dykstra(x: &DVector<f64>, budget: f64, a: &DVector<f64>, phi: f64) -> DVector<f64> {
    let mut current = x.clone();
    let mut p = DVector::zeros(x.len());
    let mut q = DVector::zeros(x.len());
    for _ in 0..200_000 {
        let y = simplex_active_set(&(&current + &p), budget);
        p = &current + &p - &y;
        let next = project_half_space(&(&y + &q), a, phi);
        q = &y + &q - &next;
        // A stationary iterate alone is not convergence: the correction
        // terms can still be trading mass. Both half-steps must agree too.
        let moved = (&next - &current).norm();
        let split = (&next - &y).norm();
        current = next;
        if moved < 1e-15 && split < 1e-13 {
            break;
        }
    }
    current
}

/// Projection of `w` onto `{β : (β − b)ᵀP(β − b) ≤ 1}`.
///
/// In the eigenbasis of `P = QΛQᵀ` the projection is
/// `zᵢ / (1 + λΛᵢ)` with `z = Qᵀ(w − b)`, where the multiplier `λ ≥ 0`
/// makes the constraint tight; the constraint is decreasing in `λ`.
pub fn ellipsoid(w: &DVector<f64>, center: &DVector<f64>, shape: &DMatrix<f64>) -> DVector<f64> {
    let d = w - center;
    if d.dot(&(shape * &d)) <= 1.0 {
        return w.clone();
    }
    let eig = shape.clone().symmetric_eigen();
    let z = eig.eigenvectors.tr_mul(&d);
    let lambdas = &eig.eigenvalues;
    let constraint = |mu: f64| {
        z.iter()
            .zip(lambdas.iter())
            .map(|(zi, li)| li * (zi / (1.0 + mu * li)).powi(2))
            .sum::<f64>()
    };
    let mut hi = 1.0;
    while constraint(hi) > 1.0 {
        hi *= 2.0;
    }
    let mu = crate::bisect(0.0, hi, |m| 1.0 - constraint(m));
    let scaled = DVector::from_iterator(
        z.len(),
        z.iter().zip(lambdas.iter()).map(|(zi, li)| zi / (1.0 + mu * li)),
    );
    center + &eig.eigenvectors * scaled
}
