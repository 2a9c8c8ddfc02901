//! JSON problem files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "study": { "channels": [ { "trials_holdout": 250, "successes_holdout": 12,
//!                              "trials_marketing": 240, "successes_marketing": 20,
//!                              "cost": 1.2 } ],
//!              "budget": 1.0 },
//!   "region": { "kind": "binomial-lr", "alpha": 0.05 },
//!   "solver": { "name": "admm", "rho": 1.0 },
//!   "pareto": { "points": 11 },
//!   "seed": 3
//! }
//! ```
//!
//! Ellipsoidal regions take either `alpha` (diagonal Fisher-information
//! shape) or an explicit `shape` matrix given as rows. Unknown fields are
//! rejected everywhere.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use robust_alloc::model::{self, LiftStudy, OutcomeMatrix};
use robust_alloc::regions::{BinomialLr, ConfidenceRegion, Ellipsoid};
use robust_alloc::solvers::{AdmmConfig, ApgConfig, SubgradientConfig};
use robust_alloc::DecisionSpace;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub study: LiftStudy,
    pub region: RegionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pareto: Option<ParetoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    BinomialLr {
        alpha: f64,
    },
    Ellipsoid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Admm,
    Apg,
    Subgradient,
    Markowitz,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Admm => "admm",
            SolverKind::Apg => "apg",
            SolverKind::Subgradient => "subgradient",
            SolverKind::Markowitz => "markowitz",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "admm" => Ok(SolverKind::Admm),
            "apg" => Ok(SolverKind::Apg),
            "subgradient" => Ok(SolverKind::Subgradient),
            "markowitz" => Ok(SolverKind::Markowitz),
            other => Err(CliError::Validation(format!("unknown solver {other:?}"))),
        }
    }
}

/// Solver choice plus optional overrides of its defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub name: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::named(SolverKind::Admm)
    }
}

impl SolverSpec {
    pub fn named(name: SolverKind) -> Self {
        SolverSpec {
            name,
            rho: None,
            eps_abs: None,
            eps_rel: None,
            max_iterations: None,
            initial_step: None,
            tolerance: None,
        }
    }

    pub fn admm_config(&self) -> AdmmConfig {
        let d = AdmmConfig::default();
        AdmmConfig {
            rho: self.rho.unwrap_or(d.rho),
            eps_abs: self.eps_abs.unwrap_or(d.eps_abs),
            eps_rel: self.eps_rel.unwrap_or(d.eps_rel),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            ..d
        }
    }

    pub fn apg_config(&self) -> ApgConfig {
        let d = ApgConfig::default();
        ApgConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            initial_step: self.initial_step.unwrap_or(d.initial_step),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            ..d
        }
    }

    pub fn subgradient_config(&self) -> SubgradientConfig {
        let d = SubgradientConfig::default();
        SubgradientConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            initial_step: self.initial_step.or(d.initial_step),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoSpec {
    /// Explicit descending floors; takes precedence over `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// Command-line values that mirror problem-file fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub solver: Option<SolverKind>,
    pub rho: Option<f64>,
    /// A region always carries its level, so this only applies with `force`.
    pub alpha: Option<f64>,
    pub force: bool,
}

/// Everything a solver needs, built and validated from a [`ProblemFile`].
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub study: LiftStudy,
    pub a: OutcomeMatrix,
    pub region: ConfidenceRegion,
    pub space: DecisionSpace,
}

impl ProblemFile {
    pub fn new(study: LiftStudy, region: RegionSpec) -> Self {
        ProblemFile {
            schema_version: SCHEMA_VERSION,
            study,
            region,
            solver: None,
            pareto: None,
            seed: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        let problem = Self::from_json(&text).map_err(|source| CliError::Parse {
            path: path.to_owned(),
            source,
        })?;
        problem.validate()?;
        Ok(problem)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json() + "\n").map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.build().map(|_| ())
    }

    /// The file's solver spec, or default ADMM when it names none.
    pub fn solver_spec(&self) -> SolverSpec {
        self.solver.clone().unwrap_or_default()
    }

    /// Merges command-line flags into the file. Values already in the file
    /// win unless `flags.force` is set.
    pub fn apply_flags(&mut self, flags: &Flags) {
        if let Some(name) = flags.solver {
            match &mut self.solver {
                Some(spec) if flags.force => spec.name = name,
                Some(_) => {}
                None => self.solver = Some(SolverSpec::named(name)),
            }
        }
        if let Some(rho) = flags.rho {
            let spec = self.solver.get_or_insert_with(SolverSpec::default);
            if flags.force || spec.rho.is_none() {
                spec.rho = Some(rho);
            }
        }
        if let (Some(alpha), true) = (flags.alpha, flags.force) {
            self.set_alpha(alpha);
        }
    }

    /// Sets the level of the region, keeping its kind.
    pub fn set_alpha(&mut self, alpha: f64) {
        match &mut self.region {
            RegionSpec::BinomialLr { alpha: a } => *a = alpha,
            RegionSpec::Ellipsoid { alpha: a, shape } => {
                *a = Some(alpha);
                *shape = None;
            }
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match &self.region {
            RegionSpec::BinomialLr { alpha } => Some(*alpha),
            RegionSpec::Ellipsoid { alpha, .. } => *alpha,
        }
    }

    pub fn build(&self) -> Result<BuiltProblem, CliError> {
        self.study.validate()?;
        let a = model::build_outcome_matrix(&self.study)?;
        let region: ConfidenceRegion = match &self.region {
            RegionSpec::BinomialLr { alpha } => BinomialLr::new(&self.study, *alpha)?.into(),
            RegionSpec::Ellipsoid {
                alpha: Some(alpha),
                shape: None,
            } => Ellipsoid::fisher(&self.study, *alpha)?.into(),
            RegionSpec::Ellipsoid {
                alpha: None,
                shape: Some(rows),
            } => {
                let m = self.study.num_params();
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(CliError::Validation(format!(
                        "ellipsoid shape must be {m}×{m}"
                    )));
                }
                let shape = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
                Ellipsoid::new(model::mle(&self.study), shape)?.into()
            }
            RegionSpec::Ellipsoid { .. } => {
                return Err(CliError::Validation(
                    "ellipsoid region needs exactly one of alpha or shape".into(),
                ))
            }
        };
        let space = DecisionSpace::simplex(self.study.num_channels(), self.study.budget)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(BuiltProblem {
            study: self.study.clone(),
            a,
            region,
            space,
        })
    }
}
