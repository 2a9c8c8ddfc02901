#![allow(dead_code)]

use robust_alloc::model::build_outcome_matrix;
use robust_alloc::regions::BinomialLr;
use robust_alloc::{ConfidenceRegion, DecisionSpace, Ellipsoid, LiftStudy, OutcomeMatrix, Problem};
use robust_alloc_oracles::region::OracleRegion;

/// Owned problem data plus the oracle's view of the same region.
pub struct Fixture {
    pub study: LiftStudy,
    pub a: OutcomeMatrix,
    pub region: ConfidenceRegion,
    pub oracle: OracleRegion,
    pub space: DecisionSpace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Lr,
    Ellipsoid,
}

impl Fixture {
    pub fn new(study: LiftStudy, kind: Kind, alpha: f64) -> Self {
        let a = build_outcome_matrix(&study).unwrap();
        let (region, oracle): (ConfidenceRegion, _) = match kind {
            Kind::Lr => (
                BinomialLr::new(&study, alpha).unwrap().into(),
                OracleRegion::lr(&study, alpha),
            ),
            Kind::Ellipsoid => {
                let e = Ellipsoid::fisher(&study, alpha).unwrap();
                let oracle = OracleRegion::ellipsoid(e.center().clone(), e.shape().clone());
                (e.into(), oracle)
            }
        };
        let space = DecisionSpace::simplex(study.num_channels(), study.budget).unwrap();
        Fixture {
            study,
            a,
            region,
            oracle,
            space,
        }
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem::new(&self.a, &self.region, &self.space).unwrap()
    }
}
