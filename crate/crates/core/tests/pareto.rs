mod common;

use common::{Fixture, Kind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robust_alloc::pareto::{default_grid, max_floor, sweep, sweep_with};
use robust_alloc::solvers::admm_solve;
use robust_alloc::AdmmConfig;
use robust_alloc_oracles::fixtures::random_study;

fn fixture(seed: u64, kind: Kind) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut study = random_study(&mut rng, 4);
    for ch in &mut study.channels {
        ch.successes_marketing = (ch.successes_marketing + ch.trials_marketing / 25).min(ch.trials_marketing);
    }
    Fixture::new(study, kind, 0.05)
}

#[test]
fn top_of_the_frontier_is_the_naive_allocation() {
    for kind in [Kind::Lr, Kind::Ellipsoid] {
        let f = fixture(1, kind);
        let config = AdmmConfig::default();
        let h = max_floor(&f.a, &f.region, &f.space).unwrap();
        let points = sweep(&f.a, &f.region, &f.space, &[h], &config).unwrap();
        assert!(points[0].is_ok(), "{:?}", points[0].error);
        assert!((points[0].expected_value - h).abs() <= 1e-8);
    }
}

#[test]
fn a_slack_floor_changes_nothing() {
    let f = fixture(2, Kind::Lr);
    let config = AdmmConfig::default();
    let (free, _) = admm_solve(&f.problem(), &config, None).unwrap();
    let points = sweep(&f.a, &f.region, &f.space, &[-10.0], &config).unwrap();
    assert!((points[0].robust_value - free.robust_value).abs() <= 1e-6);
}

#[test]
fn frontier_is_monotone_and_matches_cold_solves() {
    for (seed, kind) in [(3, Kind::Lr), (4, Kind::Ellipsoid)] {
        let f = fixture(seed, kind);
        let config = AdmmConfig::default();
        let grid = default_grid(&f.a, &f.region, &f.space, &config, 5).unwrap();
        let warm = sweep(&f.a, &f.region, &f.space, &grid, &config).unwrap();
        let cold = sweep_with(&f.a, &f.region, &f.space, &grid, &config, false).unwrap();
        for (w, c) in warm.iter().zip(&cold) {
            assert!(w.is_ok() && c.is_ok());
            assert!(w.expected_value >= w.phi - 1e-8);
            assert!(w.robust_value <= w.expected_value + 1e-8);
            assert!((w.robust_value - c.robust_value).abs() <= 1e-4);
        }
        // The grid descends, so robust values must not decrease along it.
        for pair in warm.windows(2) {
            assert!(pair[1].robust_value >= pair[0].robust_value - 1e-6);
        }
        assert!(warm[1..].iter().all(|p| p.warm_started));
        assert!(cold.iter().all(|p| !p.warm_started));
    }
}

#[test]
fn infeasible_floors_are_reported_in_place() {
    let f = fixture(5, Kind::Lr);
    let config = AdmmConfig::default();
    let h = max_floor(&f.a, &f.region, &f.space).unwrap();
    let points = sweep(&f.a, &f.region, &f.space, &[h + 1.0, h], &config).unwrap();
    assert!(!points[0].is_ok());
    assert!(points[1].is_ok());
    assert!(sweep(&f.a, &f.region, &f.space, &[h / 2.0, h], &config).is_err());
}
