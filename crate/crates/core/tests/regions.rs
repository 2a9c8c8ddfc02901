use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_alloc::model::build_outcome_matrix;
use robust_alloc::regions::BinomialLr;
use robust_alloc::{ChannelData, ConfidenceRegion, Ellipsoid, LiftStudy};
use robust_alloc_oracles::fixtures::{random_decision, random_member, random_shape, random_study};
use robust_alloc_oracles::projection;
use robust_alloc_oracles::region::OracleRegion;

fn reference_study() -> LiftStudy {
    LiftStudy::new(
        vec![ChannelData {
            trials_holdout: 200,
            successes_holdout: 10,
            trials_marketing: 200,
            successes_marketing: 30,
            cost: 1.0,
        }],
        1.0,
    )
    .unwrap()
}

/// Minimizes `objective` over region members on a grid over `[lo, hi]²`,
/// then repeatedly on finer grids around the best point. The window stays
/// wide because a boundary optimum is poorly located along the boundary.
fn grid_min(
    region: &OracleRegion,
    (lo, hi): (f64, f64),
    objective: impl Fn(f64, f64) -> f64,
) -> (f64, f64, f64) {
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (lo, hi, lo, hi);
    for _ in 0..9 {
        let steps = 600;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = x_lo + (x_hi - x_lo) * i as f64 / steps as f64;
                let y = y_lo + (y_hi - y_lo) * j as f64 / steps as f64;
                if region.contains(&DVector::from_column_slice(&[x, y]), 0.0) {
                    let v = objective(x, y);
                    if v < best.2 {
                        best = (x, y, v);
                    }
                }
            }
        }
        let half = 40.0 * (x_hi - x_lo) / steps as f64;
        (x_lo, x_hi, y_lo, y_hi) = (best.0 - half, best.0 + half, best.1 - half, best.1 + half);
    }
    best
}

#[test]
fn contains_examples() {
    let study = reference_study();
    let lr: ConfidenceRegion = BinomialLr::new(&study, 0.05).unwrap().into();
    let hat = lr.center().clone();
    assert!(lr.contains(&hat, 0.0));
    let mut outside = hat.clone();
    outside[1] = 1.5;
    assert!(!lr.contains(&outside, 0.0));

    let e: ConfidenceRegion = Ellipsoid::new(hat.clone(), DMatrix::identity(2, 2) * 50.0).unwrap().into();
    assert!(e.contains(&hat, 0.0));
}

#[test]
fn one_channel_worst_case_matches_grid_search() {
    let study = reference_study();
    let a = build_outcome_matrix(&study).unwrap();
    let region: ConfidenceRegion = BinomialLr::new(&study, 0.05).unwrap().into();
    let oracle = OracleRegion::lr(&study, 0.05);
    let worst = region.worst_case_params(&DVector::from_element(1, 1.0), &a).unwrap();

    let (h, m, value) = grid_min(&oracle, (0.0, 0.3), |h, m| m - h);
    assert!((worst.value - value).abs() < 1e-6, "{} vs {value}", worst.value);
    assert!((worst.beta[0] - h).abs() < 1e-3 && (worst.beta[1] - m).abs() < 1e-3);
    // The worst case shrinks the uplift from both sides.
    assert!(worst.beta[0] > 0.05 && worst.beta[1] < 0.15);
}

#[test]
fn one_channel_generalized_projection_matches_uplift_interval() {
    // With one channel the objective only sees the uplift m − h, so the
    // optimum is the squared distance from the target to the interval of
    // uplifts the region allows.
    let study = reference_study();
    let a = build_outcome_matrix(&study).unwrap();
    let region: ConfidenceRegion = BinomialLr::new(&study, 0.05).unwrap().into();
    let oracle = OracleRegion::lr(&study, 0.05);
    let low = oracle.linear_min(&DVector::from_column_slice(&[-1.0, 1.0])).1;
    let high = -oracle.linear_min(&DVector::from_column_slice(&[1.0, -1.0])).1;
    for target in [0.05, 0.3, -0.1] {
        let w = DVector::from_element(1, target);
        let beta = region.generalized_projection(a.matrix(), &w).unwrap();
        let got = (a.matrix() * &beta - &w).norm_squared();
        let want = (low - target).max(target - high).max(0.0).powi(2);
        assert!(region.contains(&beta, 1e-6));
        assert!((got - want).abs() < 1e-9, "target {target}: {got} vs {want}");
    }
}

#[test]
fn identity_projection_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let dim = 2 + case % 5;
        let center = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let shape = random_shape(&mut rng, dim, 0.2, 2.0);
        let w = &center + DVector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0));
        let region: ConfidenceRegion = Ellipsoid::new(center.clone(), shape.clone()).unwrap().into();
        let got = region.generalized_projection(&DMatrix::identity(dim, dim), &w).unwrap();
        let want = projection::ellipsoid(&w, &center, &shape);
        assert!((&got - &want).norm() <= 1e-6, "case {case}: {got} vs {want}");
    }
}

#[test]
fn lr_worst_case_matches_dual_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..15 {
        let n = 1 + case % 3;
        let study = random_study(&mut rng, n);
        let a = build_outcome_matrix(&study).unwrap();
        let alpha = [0.01, 0.05, 0.2][case % 3];
        let region: ConfidenceRegion = BinomialLr::new(&study, alpha).unwrap().into();
        let oracle = OracleRegion::lr(&study, alpha);
        let c = random_decision(&mut rng, n, 1.0);
        let worst = region.worst_case_params(&c, &a).unwrap();
        let want = oracle.worst_value(a.matrix(), &c);
        assert!((worst.value - want).abs() < 1e-7, "case {case}: {} vs {want}", worst.value);
        assert!(region.contains(&worst.beta, 1e-6));
        assert!(oracle.contains(&worst.beta, 1e-6));
    }
}

#[test]
fn ellipsoid_worst_case_beats_sampled_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let study = random_study(&mut rng, 3);
    let a = build_outcome_matrix(&study).unwrap();
    let ellipsoid = Ellipsoid::fisher(&study, 0.05).unwrap();
    let oracle = OracleRegion::ellipsoid(ellipsoid.center().clone(), ellipsoid.shape().clone());
    let region: ConfidenceRegion = ellipsoid.into();
    for _ in 0..20 {
        let c = random_decision(&mut rng, 3, 1.0);
        let worst = region.worst_case_params(&c, &a).unwrap();
        let q = a.apply_transpose(&c);
        for _ in 0..200 {
            let member = random_member(&mut rng, &oracle);
            assert!(q.dot(&member) >= worst.value - 1e-12);
        }
    }
}

#[test]
fn lr_members_stay_in_unit_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in [1, 3, 5] {
        let study = random_study(&mut rng, n);
        let region: ConfidenceRegion = BinomialLr::new(&study, 0.05).unwrap().into();
        let oracle = OracleRegion::lr(&study, 0.05);
        for _ in 0..1000 {
            let beta = random_member(&mut rng, &oracle);
            assert!(beta.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!(region.contains(&beta, 1e-9));
        }
    }
}

#[test]
fn degenerate_groups_keep_a_valid_region() {
    let study = LiftStudy::new(
        vec![ChannelData {
            trials_holdout: 250,
            successes_holdout: 0,
            trials_marketing: 240,
            successes_marketing: 240,
            cost: 1.0,
        }],
        1.0,
    )
    .unwrap();
    let a = build_outcome_matrix(&study).unwrap();
    let region: ConfidenceRegion = BinomialLr::new(&study, 0.05).unwrap().into();
    let oracle = OracleRegion::lr(&study, 0.05);
    for c in [1.0, 0.3] {
        let c = DVector::from_element(1, c);
        let worst = region.worst_case_params(&c, &a).unwrap();
        assert!(worst.beta.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!((worst.value - oracle.worst_value(a.matrix(), &c)).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn worst_case_is_concave(seed in any::<u64>(), lambda in 0.0f64..1.0, lr in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..4);
        let study = random_study(&mut rng, n);
        let a = build_outcome_matrix(&study).unwrap();
        let region: ConfidenceRegion = if lr {
            BinomialLr::new(&study, 0.05).unwrap().into()
        } else {
            Ellipsoid::fisher(&study, 0.05).unwrap().into()
        };
        let c1 = random_decision(&mut rng, n, 1.0);
        let c2 = random_decision(&mut rng, n, 1.0);
        let mix = &c1 * lambda + &c2 * (1.0 - lambda);
        let f = |c: &DVector<f64>| region.worst_case_params(c, &a).unwrap().value;
        prop_assert!(f(&mix) >= lambda * f(&c1) + (1.0 - lambda) * f(&c2) - 1e-6);
    }

    #[test]
    fn larger_regions_are_more_pessimistic(seed in any::<u64>(), lr in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..4);
        let study = random_study(&mut rng, n);
        let a = build_outcome_matrix(&study).unwrap();
        let c = random_decision(&mut rng, n, 1.0);
        let value = |alpha: f64| {
            let region: ConfidenceRegion = if lr {
                BinomialLr::new(&study, alpha).unwrap().into()
            } else {
                Ellipsoid::fisher(&study, alpha).unwrap().into()
            };
            region.worst_case_params(&c, &a).unwrap().value
        };
        let (wide, narrow) = (value(0.01), value(0.2));
        prop_assert!(wide <= narrow + 1e-8, "{wide} > {narrow}");
    }

    #[test]
    fn identity_projection_is_nonexpansive(seed in any::<u64>(), lr in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..3);
        let study = random_study(&mut rng, n);
        let region: ConfidenceRegion = if lr {
            BinomialLr::new(&study, 0.05).unwrap().into()
        } else {
            Ellipsoid::fisher(&study, 0.05).unwrap().into()
        };
        let m = 2 * n;
        let eye = DMatrix::identity(m, m);
        let x = DVector::from_fn(m, |_, _| rng.random_range(-0.2..0.4));
        let y = DVector::from_fn(m, |_, _| rng.random_range(-0.2..0.4));
        let px = region.generalized_projection(&eye, &x).unwrap();
        let py = region.generalized_projection(&eye, &y).unwrap();
        prop_assert!(region.contains(&px, 1e-6) && region.contains(&py, 1e-6));
        prop_assert!((&px - &py).norm() <= (&x - &y).norm() + 1e-6);
    }
}
