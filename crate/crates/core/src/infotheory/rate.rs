//! Achievable rates from the entropy-power bound R = ½ ln(1 + e^{2u}/(2πe σ²)),
//! where u is the differential entropy of the noiseless output x.

use std::f64::consts::{E, PI};

use super::{Characteristic, InfoContext, InputDistribution, NoiseModel};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadTolerance};

/// Quadrature tolerance for entropy integrals.
pub const ENTROPY_TOLERANCE: f64 = 1e-9;

/// ½ ln(1 + θ²/(2πe σ²)), nats per channel use.
pub fn max_rate<C: Characteristic>(ctx: &InfoContext<C>, noise: &NoiseModel) -> f64 {
    let theta = ctx.sens.theta;
    0.5 * (theta * theta / (2.0 * PI * E * noise.sigma_sq)).ln_1p()
}

/// Rate bound for an output of differential entropy `u` (nats).
pub fn rate_from_entropy(u: f64, noise: &NoiseModel) -> f64 {
    if u == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * (2.0 * u - (2.0 * PI * E * noise.sigma_sq).ln()).exp().ln_1p()
}

/// Differential entropy of x = x(s) when s ~ `dist`.
///
/// For F*_s the density of x is constant on [x_0, x_A] and the integral is
/// taken in x. For the uniform input, f_x = (1/A²)/x'(s) and the change of
/// variables gives u = ln A² + (1/A²) ∫ ln x'(s) ds.
pub fn output_entropy<C: Characteristic>(
    dist: InputDistribution,
    ctx: &InfoContext<C>,
) -> Result<f64> {
    let tol = QuadTolerance::new(ENTROPY_TOLERANCE, 0.0);
    if ctx.sens.theta == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    match dist {
        InputDistribution::Optimal => {
            let theta = ctx.sens.theta;
            let f = 1.0 / theta;
            integrate(|_| -f * f.ln(), ctx.sens.x0, ctx.sens.x_a, tol)
        }
        InputDistribution::Uniform => {
            let a_sq = ctx.a_sq;
            let mean_log_slope = integrate(
                |s| match ctx.output_slope(s) {
                    Ok(d) if d > 0.0 => d.ln(),
                    _ => f64::NAN,
                },
                0.0,
                a_sq,
                tol,
            )? / a_sq;
            Ok(a_sq.ln() + mean_log_slope)
        }
        InputDistribution::Ook => Err(Error::Config(
            "OOK has no density; use the bit-error-rate path".into(),
        )),
    }
}

/// Achievable-rate lower bound of `dist`, nats per channel use.
pub fn rate_for_cdf<C: Characteristic>(
    dist: InputDistribution,
    ctx: &InfoContext<C>,
    noise: &NoiseModel,
) -> Result<f64> {
    Ok(rate_from_entropy(output_entropy(dist, ctx)?, noise))
}
