//! Information reception on top of the EH characteristic.
//!
//! The receiver output is x = √P_harv(g_s s; j^a), a monotone function of
//! the transmit power s ∈ [0, A²]. Everything here is expressed through that
//! map: the sensitivity θ = x_A − x_0, the input cdf that makes x uniform,
//! rates from the entropy of x, the average harvested power E[x²], and the
//! OOK bit-error rate.

mod ber;
mod rate;

pub use ber::{ber_analytic, ber_monte_carlo, ml_detect, q_function, MonteCarloBer, MC_CHUNK};
pub use rate::{max_rate, rate_for_cdf, rate_from_entropy, output_entropy};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::ehmodel::{EhModelKind, Harvester};
use crate::error::{solver_err, Error, Result};
use crate::quad::{bisect, integrate, QuadTolerance};
use crate::spectral::{PhotocurrentState, ReceiverSpec};

/// Output signal at the two ends of the transmit range, √W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub a_sq: f64,
    pub x0: f64,
    pub x_a: f64,
    pub theta: f64,
}

/// Normalized output noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Variance of n[k] in the units of x², i.e. W.
    pub sigma_sq: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { sigma_sq: 1e-9 }
    }
}

impl NoiseModel {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(Error::Config(format!("noise variance {sigma_sq:e} must be > 0")));
        }
        Ok(NoiseModel { sigma_sq })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InputDistribution {
    /// F*_s: makes the output uniform on [x_0, x_A].
    Optimal,
    /// s uniform on [0, A²].
    Uniform,
    /// Equiprobable s ∈ {0, A²}.
    Ook,
}

impl InputDistribution {
    pub fn tag(self) -> &'static str {
        match self {
            InputDistribution::Optimal => "optimal",
            InputDistribution::Uniform => "uniform",
            InputDistribution::Ook => "ook",
        }
    }
}

impl fmt::Display for InputDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for InputDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(InputDistribution::Optimal),
            "uniform" => Ok(InputDistribution::Uniform),
            "ook" => Ok(InputDistribution::Ook),
            _ => Err(Error::Config(format!("unknown input distribution '{s}'"))),
        }
    }
}

/// One point of a rate-power region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePowerPoint {
    /// Energy-signal power p, W.
    pub p_total: f64,
    /// Achievable-rate lower bound, nats per channel use.
    pub rate: f64,
    /// Average harvested power, W.
    pub avg_power: f64,
    pub dist_kind: InputDistribution,
}

/// Receiver output as a function of the information current j^s.
pub trait Characteristic: Sync {
    /// x(j^s), √W.
    fn output(&self, j_s: f64) -> Result<f64>;
    /// dx/dj^s, √W per A.
    fn output_slope(&self, j_s: f64) -> Result<f64>;
}

impl Characteristic for Harvester<'_> {
    fn output(&self, j_s: f64) -> Result<f64> {
        Harvester::output(self, j_s)
    }

    fn output_slope(&self, j_s: f64) -> Result<f64> {
        Harvester::output_slope(self, j_s)
    }
}

/// Sensitivity of `model` at peak power `a_sq`.
pub fn sensitivity(
    a_sq: f64,
    state: &PhotocurrentState,
    rx: &ReceiverSpec,
    model: EhModelKind,
) -> Result<SensitivityResult> {
    Ok(InfoContext::new(a_sq, state, rx, model)?.sens)
}

/// A characteristic, the information gain g_s and the peak power A².
#[derive(Debug, Clone)]
pub struct InfoContext<C> {
    pub ch: C,
    /// g_s = h r(λ₀), A/W.
    pub gain: f64,
    pub a_sq: f64,
    pub sens: SensitivityResult,
}

impl<'a> InfoContext<Harvester<'a>> {
    pub fn new(
        a_sq: f64,
        state: &'a PhotocurrentState,
        rx: &'a ReceiverSpec,
        model: EhModelKind,
    ) -> Result<Self> {
        let h = Harvester::new(model, state, rx)?;
        InfoContext::with_characteristic(h, state.info_gain, a_sq)
    }
}

impl<C: Characteristic> InfoContext<C> {
    pub fn with_characteristic(ch: C, gain: f64, a_sq: f64) -> Result<Self> {
        if !(a_sq >= 0.0 && a_sq.is_finite()) {
            return Err(Error::Domain(format!("peak power A² = {a_sq:e} W must be >= 0")));
        }
        let x0 = ch.output(0.0)?;
        let x_a = ch.output(gain * a_sq)?;
        let theta = (x_a - x0).max(0.0);
        Ok(InfoContext {
            ch,
            gain,
            a_sq,
            sens: SensitivityResult {
                a_sq,
                x0,
                x_a,
                theta,
            },
        })
    }

    /// x(s), √W.
    pub fn output(&self, s: f64) -> Result<f64> {
        self.ch.output(self.gain * s)
    }

    /// dx/ds, per √W.
    pub fn output_slope(&self, s: f64) -> Result<f64> {
        Ok(self.gain * self.ch.output_slope(self.gain * s)?)
    }

    /// P_harv at transmit power `s`, W.
    pub fn harvested_power(&self, s: f64) -> Result<f64> {
        let x = self.output(s)?;
        Ok(x * x)
    }

    fn degenerate(&self) -> bool {
        self.sens.theta == 0.0
    }

    /// F*_s(s) = (x(s) − x_0)/θ on [0, A²].
    pub fn optimal_cdf(&self, s: f64) -> Result<f64> {
        if self.degenerate() {
            return Err(Error::Degenerate(format!(
                "θ = 0 at A² = {:e} W: the optimal input is a point mass",
                self.a_sq
            )));
        }
        if s < 0.0 {
            return Ok(0.0);
        }
        if s >= self.a_sq {
            return Ok(1.0);
        }
        Ok(((self.output(s)? - self.sens.x0) / self.sens.theta).clamp(0.0, 1.0))
    }

    /// cdf of any supported input distribution.
    pub fn cdf(&self, dist: InputDistribution, s: f64) -> Result<f64> {
        match dist {
            InputDistribution::Optimal => self.optimal_cdf(s),
            _ if s < 0.0 => Ok(0.0),
            _ if s >= self.a_sq => Ok(1.0),
            InputDistribution::Uniform => Ok(s / self.a_sq),
            InputDistribution::Ook => Ok(0.5),
        }
    }

    /// Inverse-transform sample of F*_s: the s with x(s) = x_0 + u θ.
    pub fn sample_optimal(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("uniform variate {u} outside [0, 1]")));
        }
        if self.degenerate() {
            return Err(Error::Degenerate("θ = 0: nothing to sample".into()));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(self.a_sq);
        }
        let target = self.sens.x0 + u * self.sens.theta;
        let tol = 1e-13 * self.sens.theta;
        // Newton on x(s) = target inside a shrinking bracket; bisection
        // whenever a step leaves it.
        let (mut lo, mut hi) = (0.0, self.a_sq);
        let mut s = u * self.a_sq;
        for _ in 0..100 {
            let f = self.output(s)? - target;
            if f.abs() <= tol {
                return Ok(s);
            }
            if f < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(s);
            }
            let d = self.output_slope(s)?;
            let next = s - f / d;
            s = if d > 0.0 && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        bisect(|s| Ok(self.output(s)? - target), lo, hi, 1e-15, 1e-17 * self.a_sq)
            .map_err(|e| solver_err("sample_optimal", format!("u = {u}: {e}")))
    }

    /// Closed form E[x²] for x uniform on [x_0, x_A].
    pub fn avg_power_optimal(&self) -> f64 {
        let (x0, xa) = (self.sens.x0, self.sens.x_a);
        (xa * xa + x0 * x0 + xa * x0) / 3.0
    }

    /// E[P_harv] under `dist`, by quadrature over s.
    pub fn avg_power_for_cdf(&self, dist: InputDistribution) -> Result<f64> {
        let (x0, xa) = (self.sens.x0, self.sens.x_a);
        let tol = QuadTolerance::new(1e-11, 0.0);
        match dist {
            InputDistribution::Ook => Ok(0.5 * (x0 * x0 + xa * xa)),
            _ if self.a_sq == 0.0 => Ok(x0 * x0),
            InputDistribution::Uniform => {
                Ok(integrate(|s| self.harvested_power(s).unwrap_or(f64::NAN), 0.0, self.a_sq, tol)?
                    / self.a_sq)
            }
            InputDistribution::Optimal => {
                if self.degenerate() {
                    return Ok(x0 * x0);
                }
                // dF* = x'(s)/θ ds.
                let theta = self.sens.theta;
                integrate(
                    |s| match (self.output(s), self.output_slope(s)) {
                        (Ok(x), Ok(d)) => x * x * d / theta,
                        _ => f64::NAN,
                    },
                    0.0,
                    self.a_sq,
                    tol,
                )
            }
        }
    }

    /// Rate and average power of `dist` as a rate-power point.
    pub fn rate_power_point(
        &self,
        dist: InputDistribution,
        noise: &NoiseModel,
        p_total: f64,
    ) -> Result<RatePowerPoint> {
        let rate = match dist {
            InputDistribution::Optimal => max_rate(self, noise),
            _ => rate_for_cdf(dist, self, noise)?,
        };
        let avg_power = match dist {
            InputDistribution::Optimal => self.avg_power_optimal(),
            _ => self.avg_power_for_cdf(dist)?,
        };
        Ok(RatePowerPoint {
            p_total,
            rate,
            avg_power,
            dist_kind: dist,
        })
    }
}

#[cfg(test)]
pub(crate) mod toy {
    use super::*;

    /// P = c j², so x = √c j: the degenerate-linearity case.
    pub struct QuadraticLoad {
        pub c: f64,
    }

    impl Characteristic for QuadraticLoad {
        fn output(&self, j_s: f64) -> Result<f64> {
            Ok(self.c.sqrt() * j_s)
        }

        fn output_slope(&self, _j_s: f64) -> Result<f64> {
            Ok(self.c.sqrt())
        }
    }
}

#[cfg(test)]
mod tests;
