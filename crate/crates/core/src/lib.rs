//! Robust allocation under parameter uncertainty.
//!
//! Solves the matrix game `max_{c∈C} min_{β∈S} cᵀAβ`, where `c` allocates a
//! budget across channels, `β` holds per-channel conversion rates, `A` maps
//! rates to incremental outcomes and `S` is a convex confidence region
//! around the estimated rates.
//!
//! - [`model`]: lift-study data, the outcome matrix, the binomial likelihood.
//! - [`regions`]: ellipsoidal and likelihood-ratio confidence regions.
//! - [`decision`]: the budget simplex, the expected-outcome floor, best responses.
//! - [`solvers`]: ADMM plus APG, subgradient and Markowitz baselines.
//! - [`pareto`]: warm-started sweeps over the expected-outcome floor.

pub mod decision;
pub mod model;
pub mod pareto;
pub mod regions;
pub mod solvers;

pub use decision::DecisionSpace;
pub use model::{ChannelData, LiftStudy, OutcomeMatrix};
pub use regions::{BarrierConfig, BinomialLr, ConfidenceRegion, Ellipsoid};
pub use solvers::{AdmmConfig, ApgConfig, Problem, SolveResult, SolveStatus, SubgradientConfig};
