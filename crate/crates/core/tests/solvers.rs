mod common;

use common::{Fixture, Kind};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_alloc::decision::naive_optimal;
use robust_alloc::model::build_outcome_matrix;
use robust_alloc::solvers::{
    admm_solve, apg_solve, duality_gap, markowitz_solve, prox_ftilde, subgradient_solve,
};
use robust_alloc::{
    AdmmConfig, ApgConfig, BarrierConfig, ChannelData, ConfidenceRegion, DecisionSpace, Ellipsoid,
    LiftStudy, OutcomeMatrix, Problem, SolveStatus, SubgradientConfig,
};
use robust_alloc_oracles::fixtures::{random_decision, random_member, random_study};

fn channel(sh: u64, th: u64, sm: u64, tm: u64, cost: f64) -> ChannelData {
    ChannelData {
        trials_holdout: th,
        successes_holdout: sh,
        trials_marketing: tm,
        successes_marketing: sm,
        cost,
    }
}

/// Random fixtures with a nonzero robust optimum, so that the saddle
/// point is not the degenerate `c = 0`.
fn interesting_fixtures(seed: u64, count: usize, kind: Kind, sizes: &[usize]) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = sizes[out.len() % sizes.len()];
        let mut study = random_study(&mut rng, n);
        // Lift the marketing counts so most channels are worth funding.
        for ch in &mut study.channels {
            ch.successes_marketing = (ch.successes_marketing + ch.trials_marketing / 25).min(ch.trials_marketing);
        }
        let fixture = Fixture::new(study, kind, 0.05);
        let (result, _) = admm_solve(&fixture.problem(), &AdmmConfig::default(), None).unwrap();
        if result.robust_value > 1e-4 {
            out.push(fixture);
        }
    }
    out
}

#[test]
fn prox_matches_nested_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..20 {
        let n = 1 + case % 2;
        let kind = if case % 4 < 2 { Kind::Lr } else { Kind::Ellipsoid };
        let fixture = Fixture::new(random_study(&mut rng, n), kind, 0.05);
        let rho = rng.random_range(0.5..2.0);
        let v = DVector::from_fn(n, |_, _| rng.random_range(-0.5..1.0));
        let (y, beta) = prox_ftilde(&fixture.a, &fixture.region, rho, &v, &BarrierConfig::default()).unwrap();
        assert!(fixture.region.contains(&beta, 1e-6));

        let a = fixture.a.matrix();
        let oracle_y = fixture.oracle.prox(a, rho, &v);
        let got = fixture.oracle.prox_objective(a, rho, &v, &y);
        let want = fixture.oracle.prox_objective(a, rho, &v, &oracle_y);
        assert!((got - want).abs() <= 1e-5, "case {case}: {got} vs {want}");
    }
}

#[test]
fn prox_of_a_near_point_region_is_a_shift() {
    let study = LiftStudy::new(vec![channel(10, 200, 30, 200, 1.0)], 1.0).unwrap();
    let a = build_outcome_matrix(&study).unwrap();
    let hat = DVector::from_column_slice(&[0.05, 0.15]);
    let region: ConfidenceRegion = Ellipsoid::new(hat.clone(), DMatrix::identity(2, 2) * 1e14).unwrap().into();
    let v = DVector::from_element(1, 0.4);
    let (y, _) = prox_ftilde(&a, &region, 2.0, &v, &BarrierConfig::default()).unwrap();
    let shift = &v + a.apply(&hat) / 2.0;
    assert!((y - shift).norm() < 1e-6);
}

#[test]
fn markowitz_one_channel_example() {
    let a = OutcomeMatrix::from_costs(&[1.0]).unwrap();
    let hat = DVector::from_column_slice(&[0.2, 0.3]);
    let e = Ellipsoid::new(hat, DMatrix::identity(2, 2) * 100.0).unwrap();
    let region: ConfidenceRegion = e.clone().into();
    let space = DecisionSpace::simplex(1, 1.0).unwrap();
    let problem = Problem::new(&a, &region, &space).unwrap();
    let result = markowitz_solve(&problem).unwrap();
    assert_eq!(result.decision[0], 0.0);
    assert_eq!(result.robust_value, 0.0);
    // Brute force over a grid of allocations.
    let best = (0..=1000)
        .map(|i| {
            let c = DVector::from_element(1, i as f64 / 1000.0);
            robust_alloc::solvers::markowitz_objective(&a, &e, &c)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best, 0.0);
}

#[test]
fn markowitz_without_uncertainty_is_naive() {
    let a = OutcomeMatrix::from_costs(&[1.0, 1.0, 2.0]).unwrap();
    let hat = DVector::from_column_slice(&[0.05, 0.08, 0.05, 0.12, 0.05, 0.20]);
    let region: ConfidenceRegion = Ellipsoid::new(hat.clone(), DMatrix::identity(6, 6) * 1e12).unwrap().into();
    let space = DecisionSpace::simplex(3, 1.0).unwrap();
    let problem = Problem::new(&a, &region, &space).unwrap();
    let result = markowitz_solve(&problem).unwrap();
    let naive = naive_optimal(&space, &hat, &a).unwrap();
    assert!((result.decision - naive).norm() < 1e-3);
}

#[test]
fn solvers_agree_on_ellipsoids() {
    for fixture in interesting_fixtures(31, 6, Kind::Ellipsoid, &[2, 5]) {
        let problem = fixture.problem();
        let reference = markowitz_solve(&problem).unwrap().robust_value;
        let tol = 1e-4 * (1.0 + reference.abs());
        let (admm, _) = admm_solve(&problem, &AdmmConfig::default(), None).unwrap();
        let (apg, _) = apg_solve(&problem, &ApgConfig::default(), None).unwrap();
        assert!((admm.robust_value - reference).abs() <= tol, "admm {} vs {reference}", admm.robust_value);
        assert!((apg.robust_value - reference).abs() <= 1e-6, "apg {} vs {reference}", apg.robust_value);
    }
}

#[test]
fn admm_meets_its_stopping_rule_and_is_rho_invariant() {
    let mut fixtures = interesting_fixtures(41, 3, Kind::Lr, &[2, 3, 5]);
    fixtures.extend(interesting_fixtures(42, 2, Kind::Ellipsoid, &[3, 5]));
    for fixture in &fixtures {
        let problem = fixture.problem();
        let values: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&rho| {
                let config = AdmmConfig {
                    rho,
                    ..AdmmConfig::default()
                };
                let (result, trace) = admm_solve(&problem, &config, None).unwrap();
                assert_eq!(result.status, SolveStatus::Converged, "rho {rho}: {:?} after {}", result.detail, result.iterations);
                let last = trace.records.last().unwrap();
                assert!(last.primal_residual.unwrap() <= last.eps_pri.unwrap());
                assert!(last.dual_residual.unwrap() <= last.eps_dual.unwrap());
                result.robust_value
            })
            .collect();
        let spread = values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-4, "{values:?}");
    }
}

#[test]
fn converged_solutions_are_sampled_saddle_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut fixtures = interesting_fixtures(52, 3, Kind::Lr, &[2, 5]);
    fixtures.extend(interesting_fixtures(53, 2, Kind::Ellipsoid, &[2, 4]));
    for fixture in &fixtures {
        let problem = fixture.problem();
        let (result, _) = admm_solve(&problem, &AdmmConfig::default(), None).unwrap();
        assert_eq!(result.status, SolveStatus::Converged);
        let g = |c: &DVector<f64>, beta: &DVector<f64>| c.dot(&fixture.a.apply(beta));
        let (c_star, beta_star) = (&result.decision, &result.worst_case);
        let value = g(c_star, beta_star);
        let n = fixture.space.num_channels();
        for _ in 0..100 {
            let c = random_decision(&mut rng, n, fixture.space.budget());
            assert!(g(&c, beta_star) <= value + 1e-5);
            let beta = random_member(&mut rng, &fixture.oracle);
            assert!(value <= g(c_star, &beta) + 1e-5);
        }
        assert!(result.robust_value <= result.expected_value + 1e-8);
        let gap = duality_gap(&problem, c_star, beta_star).unwrap();
        assert!((-1e-8..=1e-5).contains(&gap), "gap {gap}");
    }
}

#[test]
fn identical_channels_have_a_symmetric_optimum() {
    let ch = channel(12, 300, 30, 300, 1.0);
    let study = LiftStudy::new(vec![ch.clone(), ch], 1.0).unwrap();
    let fixture = Fixture::new(study, Kind::Lr, 0.05);
    let problem = fixture.problem();
    let (result, _) = admm_solve(&problem, &AdmmConfig::default(), None).unwrap();
    let f = |c: &DVector<f64>| problem.worst_case(c, &BarrierConfig::default()).unwrap().value;
    let c = &result.decision;
    let reflected = DVector::from_column_slice(&[c[1], c[0]]);
    let symmetric = (c + &reflected) / 2.0;
    assert!(result.robust_value >= f(&reflected) - 1e-6);
    assert!((result.robust_value - f(&symmetric)).abs() <= 1e-5);
}

#[test]
fn baselines_on_a_nearly_certain_channel() {
    let study = LiftStudy::new(vec![channel(10, 200, 30, 200, 1.0)], 1.0).unwrap();
    let a = build_outcome_matrix(&study).unwrap();
    let hat = DVector::from_column_slice(&[0.05, 0.15]);
    let region: ConfidenceRegion = Ellipsoid::new(hat, DMatrix::identity(2, 2) * 1e8).unwrap().into();
    let space = DecisionSpace::simplex(1, 1.0).unwrap();
    let problem = Problem::new(&a, &region, &space).unwrap();
    let truth = 0.1 - (2.0f64 / 1e8).sqrt();

    let (admm, _) = admm_solve(&problem, &AdmmConfig::default(), None).unwrap();
    let (apg, _) = apg_solve(&problem, &ApgConfig::default(), None).unwrap();
    let sub_config = SubgradientConfig {
        max_iterations: 500,
        ..SubgradientConfig::default()
    };
    let (sub, _) = subgradient_solve(&problem, &sub_config, None).unwrap();
    assert!((admm.decision[0] - 1.0).abs() < 1e-5);
    assert!((apg.decision[0] - admm.decision[0]).abs() < 1e-5);
    assert!((admm.robust_value - truth).abs() < 1e-6);
    assert!((sub.robust_value - truth).abs() < 1e-3);
}

#[test]
fn subgradient_keeps_its_best_iterate() {
    for fixture in interesting_fixtures(61, 2, Kind::Lr, &[3]) {
        let problem = fixture.problem();
        let start = problem.space.uniform_start();
        let f0 = problem.worst_case(&start, &BarrierConfig::default()).unwrap().value;
        let short = SubgradientConfig {
            max_iterations: 20,
            ..SubgradientConfig::default()
        };
        let long = SubgradientConfig {
            max_iterations: 200,
            ..SubgradientConfig::default()
        };
        let (a, _) = subgradient_solve(&problem, &short, None).unwrap();
        let (b, _) = subgradient_solve(&problem, &long, None).unwrap();
        assert!(a.robust_value >= f0 && b.robust_value >= a.robust_value);
        assert_eq!(b.status, SolveStatus::MaxIterations);
    }
}

#[test]
fn gap_is_nonnegative_at_feasible_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for kind in [Kind::Lr, Kind::Ellipsoid] {
        let fixture = Fixture::new(random_study(&mut rng, 3), kind, 0.05);
        let problem = fixture.problem();
        for _ in 0..30 {
            let c = random_decision(&mut rng, 3, 1.0);
            let beta = random_member(&mut rng, &fixture.oracle);
            assert!(duality_gap(&problem, &c, &beta).unwrap() >= -1e-8);
        }
        let beta = random_member(&mut rng, &fixture.oracle);
        let zero = DVector::zeros(3);
        let h = problem.best_response(&beta).unwrap();
        assert_eq!(duality_gap(&problem, &zero, &beta).unwrap(), h);
    }
}
