//! Synthetic lift studies.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, a
//! documented, platform-independent stream, so a seed reproduces the same
//! study everywhere. Per channel, in order:
//!
//! 1. holdout trials, then marketing trials, uniform integers in `[low, high]`;
//! 2. holdout rate uniform in `[0.01, 0.10)`;
//! 3. uplift uniform in `[−0.01, 0.05)`; marketing rate = holdout + uplift;
//! 4. holdout successes, then marketing successes, each a sum of Bernoulli
//!    draws (`u < p` for `u` uniform in `[0, 1)`);
//! 5. cost uniform in `[0.5, 2.0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_alloc::{ChannelData, LiftStudy};

use crate::CliError;

pub const HOLDOUT_RATE_RANGE: (f64, f64) = (0.01, 0.10);
pub const UPLIFT_RANGE: (f64, f64) = (-0.01, 0.05);
pub const COST_RANGE: (f64, f64) = (0.5, 2.0);

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn binomial(rng: &mut ChaCha8Rng, trials: u64, p: f64) -> u64 {
    (0..trials).filter(|_| rng.random::<f64>() < p).count() as u64
}

/// A study with `channels` channels and a unit budget.
pub fn generate_lift_study(
    seed: u64,
    channels: usize,
    trials: (u64, u64),
) -> Result<LiftStudy, CliError> {
    let (low, high) = trials;
    if low == 0 || low > high {
        return Err(CliError::Validation(format!(
            "invalid trial range {low}:{high}"
        )));
    }
    if channels == 0 {
        return Err(CliError::Validation("need at least one channel".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..channels)
        .map(|_| {
            let trials_holdout = rng.random_range(low..=high);
            let trials_marketing = rng.random_range(low..=high);
            let holdout = uniform(&mut rng, HOLDOUT_RATE_RANGE);
            let marketing = (holdout + uniform(&mut rng, UPLIFT_RANGE)).clamp(0.0, 1.0);
            let successes_holdout = binomial(&mut rng, trials_holdout, holdout);
            let successes_marketing = binomial(&mut rng, trials_marketing, marketing);
            let cost = uniform(&mut rng, COST_RANGE);
            ChannelData {
                trials_holdout,
                successes_holdout,
                trials_marketing,
                successes_marketing,
                cost,
            }
        })
        .collect();
    Ok(LiftStudy::new(data, 1.0)?)
}

/// Parses `low:high`.
pub fn parse_trial_range(spec: &str) -> Result<(u64, u64), CliError> {
    let bad = || CliError::Validation(format!("trial range must look like 200:500, got {spec:?}"));
    let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
    let lo = lo.trim().parse().map_err(|_| bad())?;
    let hi = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}
