//! Maximum-likelihood OOK detection and its bit-error rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Characteristic, InfoContext, NoiseModel, SensitivityResult};
use crate::error::{Error, Result};

/// Trials per independently seeded Monte Carlo chunk.
pub const MC_CHUNK: u64 = 1 << 16;
/// Smallest accepted Monte Carlo run.
pub const MIN_TRIALS: u64 = 10_000;

/// Gaussian tail Q(x) = ½ erfc(x/√2).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// A² if y >= (x_0 + x_A)/2, else 0.
pub fn ml_detect(y: f64, sens: &SensitivityResult) -> f64 {
    if y >= 0.5 * (sens.x0 + sens.x_a) {
        sens.a_sq
    } else {
        0.0
    }
}

/// Q(θ / 2σ).
pub fn ber_analytic<C: Characteristic>(ctx: &InfoContext<C>, noise: &NoiseModel) -> f64 {
    q_function(ctx.sens.theta / (2.0 * noise.sigma()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloBer {
    pub ber: f64,
    /// 95% normal-approximation half-width of the binomial estimate.
    pub half_width: f64,
    pub errors: u64,
    pub trials: u64,
}

impl MonteCarloBer {
    /// Binomial standard error at probability `p`.
    pub fn standard_error(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Simulated OOK with ML detection.
///
/// Trials are cut into chunks of [`MC_CHUNK`]; chunk c draws from ChaCha8
/// seeded with `seed` on stream c. The error count is a sum over chunks, so
/// the result depends only on (seed, trials), not on the thread count.
pub fn ber_monte_carlo<C: Characteristic>(
    ctx: &InfoContext<C>,
    noise: &NoiseModel,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloBer> {
    if trials < MIN_TRIALS {
        return Err(Error::Domain(format!("{trials} trials; at least {MIN_TRIALS} required")));
    }
    let sens = ctx.sens;
    let sigma = noise.sigma();
    let threshold = 0.5 * (sens.x0 + sens.x_a);
    let chunks = trials.div_ceil(MC_CHUNK);
    let errors: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(trials - c * MC_CHUNK);
            let mut errs = 0u64;
            for _ in 0..n {
                let one: bool = rng.random();
                let x = if one { sens.x_a } else { sens.x0 };
                let z: f64 = rng.sample(StandardNormal);
                let decided_one = x + sigma * z >= threshold;
                errs += u64::from(decided_one != one);
            }
            errs
        })
        .sum();
    let ber = errors as f64 / trials as f64;
    Ok(MonteCarloBer {
        ber,
        half_width: 1.96 * (ber * (1.0 - ber) / trials as f64).sqrt(),
        errors,
        trials,
    })
}
