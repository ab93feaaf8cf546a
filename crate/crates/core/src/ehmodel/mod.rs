//! Energy-harvesting models of the photovoltaic receiver.
//!
//! Four models of the harvested DC power P_harv = R_L i²_EH are provided,
//! from exact to closed form:
//!
//! * [`solve_accurate`]: the series stack of two-diode junctions, with the
//!   load current found as the fixed point i R_Σ = Σ Φ⁻¹_n(i).
//! * [`solve_approximate`]: large shunt resistance and equal saturation
//!   currents per junction reduce each junction to a logarithm, leaving the
//!   scalar equation Π(j_n − i + I_n)·exp(−R_Σ i / V_T) = Π I_n.
//! * [`closed_form_single`]: for N = 1 that equation is solved by Lambert W.
//! * [`closed_form_multi`]: with every junction strongly illuminated, the
//!   current becomes a sum of logarithms.
//!
//! Two reference models from earlier SLIPT work are kept for comparison:
//! a single-diode equivalent circuit ([`baseline_single_diode`]) and a
//! maximum-power-point-tracking receiver ([`baseline_mpp`]).

mod junction;
mod lambert;

pub use junction::{phi, phi_inverse, phi_slope, EXP_GUARD};
pub use lambert::{lambert_w0, lambert_w0_exp};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{solver_err, Error, Result};
use crate::quad::{bisect, golden_max, integrate, QuadTolerance};
use crate::spectral::{JunctionSpec, PhotocurrentState, ReceiverSpec};

/// Relative tolerance on solved currents.
pub const CURRENT_REL_TOL: f64 = 1e-14;
/// Absolute floor on solved currents, A.
pub const CURRENT_ABS_TOL: f64 = 1e-24;
/// Information power at which the MPP baseline is calibrated, W.
pub const MPP_CALIBRATION_POWER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EhModelKind {
    Accurate,
    Approximate,
    ClosedFormSingle,
    ClosedFormMulti,
    BaselineSingleDiode,
    BaselineMpp,
}

impl EhModelKind {
    pub const ALL: [EhModelKind; 6] = [
        EhModelKind::Accurate,
        EhModelKind::Approximate,
        EhModelKind::ClosedFormSingle,
        EhModelKind::ClosedFormMulti,
        EhModelKind::BaselineSingleDiode,
        EhModelKind::BaselineMpp,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EhModelKind::Accurate => "accurate",
            EhModelKind::Approximate => "approximate",
            EhModelKind::ClosedFormSingle => "closed-form-single",
            EhModelKind::ClosedFormMulti => "closed-form-multi",
            EhModelKind::BaselineSingleDiode => "baseline-single-diode",
            EhModelKind::BaselineMpp => "baseline-mpp",
        }
    }

    /// Whether the model is defined only for a single junction.
    pub fn single_junction_only(self) -> bool {
        matches!(
            self,
            EhModelKind::ClosedFormSingle
                | EhModelKind::BaselineSingleDiode
                | EhModelKind::BaselineMpp
        )
    }

    /// Closed-form model that matches the junction count.
    pub fn closed_form_for(junctions: usize) -> Self {
        if junctions == 1 {
            EhModelKind::ClosedFormSingle
        } else {
            EhModelKind::ClosedFormMulti
        }
    }

    fn check(self, junctions: usize) -> Result<()> {
        if self.single_junction_only() && junctions != 1 {
            Err(Error::ModelMismatch {
                model: self.tag(),
                junctions,
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for EhModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EhModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EhModelKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown EH model '{s}'")))
    }
}

/// Result of one model evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhSolution {
    /// DC output current i*_EH, A.
    pub i_eh: f64,
    /// Junction voltages, V. Empty for models that do not resolve them.
    pub v: Vec<f64>,
    /// R_L i²_EH, W.
    pub p_harv: f64,
    pub model: EhModelKind,
    /// Final residual of the defining equation (V for the accurate model,
    /// nats for the approximate model, 0 for closed forms).
    pub residual: f64,
    pub warnings: Vec<String>,
}

impl EhSolution {
    fn new(rx: &ReceiverSpec, model: EhModelKind, i_eh: f64, v: Vec<f64>, residual: f64) -> Self {
        EhSolution {
            i_eh,
            v,
            p_harv: rx.r_load * i_eh * i_eh,
            model,
            residual,
            warnings: Vec::new(),
        }
    }
}

fn check_state(state: &PhotocurrentState, rx: &ReceiverSpec, s: f64) -> Result<()> {
    if state.n() != rx.n() {
        return Err(Error::Config(format!(
            "photocurrent state has {} junctions, receiver has {}",
            state.n(),
            rx.n()
        )));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("transmit power {s:e} W must be >= 0")));
    }
    Ok(())
}

/// Accurate model: i R_Σ = Σ Φ⁻¹_n(i), solved by bisection on the increasing
/// function g(i) = i R_Σ − Σ Φ⁻¹_n(i).
pub fn solve_accurate(state: &PhotocurrentState, s: f64, rx: &ReceiverSpec) -> Result<EhSolution> {
    check_state(state, rx, s)?;
    accurate_for_currents(rx, &state.junction_currents(state.info_current(s)))
}

/// Accurate model for an explicit per-junction current vector.
pub fn accurate_for_currents(rx: &ReceiverSpec, j: &[f64]) -> Result<EhSolution> {
    if j.len() != rx.n() {
        return Err(Error::Config("current vector length differs from N".into()));
    }
    let v_t = rx.v_t;
    let r_sigma = rx.r_sigma();
    let voltages = |i: f64| -> Result<Vec<f64>> {
        rx.junctions
            .iter()
            .zip(j)
            .map(|(jn, &jj)| phi_inverse(i, jn, jj, v_t))
            .collect()
    };
    let g = |i: f64| -> Result<f64> { Ok(i * r_sigma - voltages(i)?.iter().sum::<f64>()) };

    let j_max = j.iter().copied().fold(0.0, f64::max);
    if j_max == 0.0 && j.iter().all(|&x| x == 0.0) {
        return Ok(EhSolution::new(rx, EhModelKind::Accurate, 0.0, vec![0.0; rx.n()], 0.0));
    }

    let g0 = g(0.0)?;
    if g0 >= 0.0 {
        // Σ v_oc <= 0 only when no junction is driven.
        return Ok(EhSolution::new(rx, EhModelKind::Accurate, 0.0, voltages(0.0)?, g0));
    }
    let i_sat_max = rx
        .junctions
        .iter()
        .map(|jn| jn.i_sat1 + jn.i_sat2)
        .fold(0.0, f64::max);
    let mut hi = j
        .iter()
        .zip(&rx.junctions)
        .map(|(&jj, jn)| jj + jn.i_sat1 + jn.i_sat2)
        .fold(0.0, f64::max);
    let cap = 1e3 * (j_max + i_sat_max);
    while g(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > cap {
            return Err(solver_err(
                "solve_accurate",
                format!("no sign change of g(i) up to {cap:e} A for j = {j:?}"),
            ));
        }
    }
    let i = bisect(g, 0.0, hi, CURRENT_REL_TOL, CURRENT_ABS_TOL)?;
    let v = voltages(i)?;
    let residual = i * r_sigma - v.iter().sum::<f64>();
    Ok(EhSolution::new(rx, EhModelKind::Accurate, i, v, residual))
}

/// Saturation current I_n the approximate models use for a junction.
pub fn effective_saturation(junction: &JunctionSpec) -> f64 {
    junction.i_sat1
}

/// Approximate model, solved in the log domain:
/// Σ ln(1 + (j_n − i)/I_n) − R_Σ i / V_T = 0.
pub fn solve_approximate(
    state: &PhotocurrentState,
    s: f64,
    rx: &ReceiverSpec,
) -> Result<EhSolution> {
    check_state(state, rx, s)?;
    approximate_for_currents(rx, &state.junction_currents(state.info_current(s)))
}

/// ln((j − i + I)/I), exact at the pole i = j + I.
fn log_term(j: f64, i_sat: f64, i: f64) -> f64 {
    let x = (j - i) / i_sat;
    if x > -0.5 {
        x.ln_1p()
    } else {
        ((j + i_sat - i) / i_sat).ln()
    }
}

pub fn approximate_for_currents(rx: &ReceiverSpec, j: &[f64]) -> Result<EhSolution> {
    let sat: Vec<f64> = rx.junctions.iter().map(effective_saturation).collect();
    let b = rx.r_sigma() / rx.v_t;
    let f = |i: f64| -> Result<f64> {
        Ok(j.iter().zip(&sat).map(|(&jj, &is)| log_term(jj, is, i)).sum::<f64>() - b * i)
    };
    let f0 = f(0.0)?;
    if f0 <= 0.0 {
        return Ok(EhSolution::new(rx, EhModelKind::Approximate, 0.0, Vec::new(), f0));
    }
    let hi = j
        .iter()
        .zip(&sat)
        .map(|(&jj, &is)| jj + is)
        .fold(f64::INFINITY, f64::min);
    let i = bisect(f, 0.0, hi, CURRENT_REL_TOL, CURRENT_ABS_TOL)?;
    let v = j
        .iter()
        .zip(&sat)
        .map(|(&jj, &is)| rx.v_t * log_term(jj, is, i))
        .collect();
    Ok(EhSolution::new(rx, EhModelKind::Approximate, i, v, f(i)?))
}

/// Root of (A − κ i) = I e^{b i}, i.e. the load current of a single diode
/// with saturation current `i_sat`, driven by `a_total − i_sat`.
///
/// Two algebraically equal forms are evaluated and the better conditioned
/// one is returned: the direct form A/κ − w/b, which cancels when the diode
/// takes most of the photocurrent, and the logarithmic form ln(w/c)/b,
/// which cancels when it takes almost none.
fn single_diode_current(a_total: f64, i_sat: f64, kappa: f64, b: f64) -> (f64, f64) {
    let c = i_sat * b / kappa;
    let y = c.ln() + b * a_total / kappa;
    let w = lambert_w0_exp(y);
    let direct = a_total / kappa - w / b;
    let log_form = (w.ln() - c.ln()) / b;
    let direct_cond = (a_total / kappa) / direct.abs().max(f64::MIN_POSITIVE);
    let log_cond = (w.ln().abs() + c.ln().abs()) / (w.ln() - c.ln()).abs().max(f64::MIN_POSITIVE);
    let i = if direct_cond <= log_cond { direct } else { log_form };
    (i.max(0.0), w)
}

/// Single-junction closed form: i = j + I₁ − (V_T/R_Σ) W₀(I₁ R_Σ/V_T · e^{R_Σ (j + I₁)/V_T}).
pub fn closed_form_single(
    state: &PhotocurrentState,
    s: f64,
    rx: &ReceiverSpec,
) -> Result<EhSolution> {
    check_state(state, rx, s)?;
    EhModelKind::ClosedFormSingle.check(rx.n())?;
    closed_form_single_current(rx, state.ambient[0] + state.info_current(s))
}

pub fn closed_form_single_current(rx: &ReceiverSpec, j: f64) -> Result<EhSolution> {
    EhModelKind::ClosedFormSingle.check(rx.n())?;
    if j == 0.0 {
        return Ok(EhSolution::new(rx, EhModelKind::ClosedFormSingle, 0.0, vec![0.0], 0.0));
    }
    let i_sat = effective_saturation(&rx.junctions[0]);
    let (i, _) = single_diode_current(j + i_sat, i_sat, 1.0, rx.r_sigma() / rx.v_t);
    Ok(EhSolution::new(rx, EhModelKind::ClosedFormSingle, i, vec![i * rx.r_sigma()], 0.0))
}

/// Multi-junction closed form for strongly illuminated junctions:
/// i = (V_T/R_Σ) Σ ln(1 + j_n/I_n).
pub fn closed_form_multi(
    state: &PhotocurrentState,
    s: f64,
    rx: &ReceiverSpec,
) -> Result<EhSolution> {
    check_state(state, rx, s)?;
    closed_form_multi_currents(rx, &state.junction_currents(state.info_current(s)))
}

/// Ratio j_n / I_n below which the multi-junction closed form is flagged.
pub const HIGH_ILLUMINATION_RATIO: f64 = 100.0;

pub fn closed_form_multi_currents(rx: &ReceiverSpec, j: &[f64]) -> Result<EhSolution> {
    let mut warnings = Vec::new();
    let mut total = 0.0;
    let mut v = Vec::with_capacity(j.len());
    for (n, (&jj, jn)) in j.iter().zip(&rx.junctions).enumerate() {
        let is = effective_saturation(jn);
        if jj <= HIGH_ILLUMINATION_RATIO * is {
            warnings.push(format!(
                "junction {} current {jj:.3e} A is not >> I_n = {is:.1e} A",
                n + 1
            ));
        }
        let log = (jj / is).ln_1p();
        v.push(rx.v_t * log);
        total += log;
    }
    let mut sol = EhSolution::new(
        rx,
        EhModelKind::ClosedFormMulti,
        rx.v_t / rx.r_sigma() * total,
        v,
        0.0,
    );
    sol.warnings = warnings;
    Ok(sol)
}

/// Single-diode equivalent circuit (diffusion diode and shunt, no
/// recombination diode), solved exactly with Lambert W:
/// (j + I₁) − κ i = I₁ e^{R_Σ i / V_T}, κ = 1 + R_Σ/R_sh.
pub fn baseline_single_diode(
    state: &PhotocurrentState,
    s: f64,
    rx: &ReceiverSpec,
) -> Result<EhSolution> {
    check_state(state, rx, s)?;
    EhModelKind::BaselineSingleDiode.check(rx.n())?;
    baseline_single_diode_current(rx, state.ambient[0] + state.info_current(s))
}

pub fn baseline_single_diode_current(rx: &ReceiverSpec, j: f64) -> Result<EhSolution> {
    EhModelKind::BaselineSingleDiode.check(rx.n())?;
    if j == 0.0 {
        return Ok(EhSolution::new(rx, EhModelKind::BaselineSingleDiode, 0.0, vec![0.0], 0.0));
    }
    let jn = &rx.junctions[0];
    let r_sigma = rx.r_sigma();
    let kappa = if jn.r_sh.is_infinite() {
        1.0
    } else {
        1.0 + r_sigma / jn.r_sh
    };
    let (i, _) = single_diode_current(j + jn.i_sat1, jn.i_sat1, kappa, r_sigma / rx.v_t);
    Ok(EhSolution::new(rx, EhModelKind::BaselineSingleDiode, i, vec![i * r_sigma], 0.0))
}

/// Maximum of v Φ(v) over [0, v_oc] for one junction, W.
pub fn mpp_power(junction: &JunctionSpec, j: f64, v_t: f64) -> Result<f64> {
    if j <= 0.0 {
        return Ok(0.0);
    }
    let v_oc = phi_inverse(0.0, junction, j, v_t)?;
    let (_, p) = golden_max(
        |v| v * phi(v, junction, j, v_t).unwrap_or(f64::NEG_INFINITY),
        0.0,
        v_oc,
        1e-12 * v_oc.max(v_t),
    );
    Ok(p.max(0.0))
}

/// Scale applied to the MPP baseline so it equals the single-junction closed
/// form at s = 100 mW with no ambient or energy-signal current.
pub fn mpp_calibration(state: &PhotocurrentState, rx: &ReceiverSpec) -> Result<f64> {
    EhModelKind::BaselineMpp.check(rx.n())?;
    let j_cal = state.info_gain * MPP_CALIBRATION_POWER;
    let raw = mpp_power(&rx.junctions[0], j_cal, rx.v_t)?;
    if raw <= 0.0 {
        return Ok(1.0);
    }
    Ok(closed_form_single_current(rx, j_cal)?.p_harv / raw)
}

/// MPP-tracking baseline: a perfectly matched load on the junction, scaled
/// by [`mpp_calibration`].
pub fn baseline_mpp(state: &PhotocurrentState, s: f64, rx: &ReceiverSpec) -> Result<f64> {
    check_state(state, rx, s)?;
    EhModelKind::BaselineMpp.check(rx.n())?;
    let scale = mpp_calibration(state, rx)?;
    let j = state.ambient[0] + state.info_current(s);
    Ok(scale * mpp_power(&rx.junctions[0], j, rx.v_t)?)
}

/// Evaluates any model at transmit power `s`.
///
/// The MPP baseline reports its power through the equivalent load current
/// √(P/R_L), so `p_harv` agrees with [`baseline_mpp`] to rounding.
pub fn evaluate(
    model: EhModelKind,
    state: &PhotocurrentState,
    s: f64,
    rx: &ReceiverSpec,
) -> Result<EhSolution> {
    Harvester::new(model, state, rx)?.solve(state.info_current(s))
}

/// A model bound to one receiver and ambient state, evaluated as a function
/// of the information current j^s.
#[derive(Debug, Clone)]
pub struct Harvester<'a> {
    pub model: EhModelKind,
    pub state: &'a PhotocurrentState,
    pub rx: &'a ReceiverSpec,
    mpp_scale: f64,
}

impl<'a> Harvester<'a> {
    pub fn new(
        model: EhModelKind,
        state: &'a PhotocurrentState,
        rx: &'a ReceiverSpec,
    ) -> Result<Self> {
        check_state(state, rx, 0.0)?;
        model.check(rx.n())?;
        let mpp_scale = if model == EhModelKind::BaselineMpp {
            mpp_calibration(state, rx)?
        } else {
            1.0
        };
        Ok(Harvester {
            model,
            state,
            rx,
            mpp_scale,
        })
    }

    /// Full solution at information current `j_s`.
    pub fn solve(&self, j_s: f64) -> Result<EhSolution> {
        if !(j_s >= 0.0 && j_s.is_finite()) {
            return Err(Error::Domain(format!("information current {j_s:e} A")));
        }
        let rx = self.rx;
        let j = self.state.junction_currents(j_s);
        match self.model {
            EhModelKind::Accurate => accurate_for_currents(rx, &j),
            EhModelKind::Approximate => approximate_for_currents(rx, &j),
            EhModelKind::ClosedFormSingle => closed_form_single_current(rx, j[0]),
            EhModelKind::ClosedFormMulti => closed_form_multi_currents(rx, &j),
            EhModelKind::BaselineSingleDiode => baseline_single_diode_current(rx, j[0]),
            EhModelKind::BaselineMpp => {
                let p = self.mpp_scale * mpp_power(&rx.junctions[0], j[0], rx.v_t)?;
                let i = (p / rx.r_load).sqrt();
                Ok(EhSolution::new(rx, EhModelKind::BaselineMpp, i, Vec::new(), 0.0))
            }
        }
    }

    pub fn current(&self, j_s: f64) -> Result<f64> {
        Ok(self.solve(j_s)?.i_eh)
    }

    pub fn power(&self, j_s: f64) -> Result<f64> {
        Ok(self.solve(j_s)?.p_harv)
    }

    /// Normalized receiver output x = √P_harv, √W.
    pub fn output(&self, j_s: f64) -> Result<f64> {
        Ok(self.rx.r_load.sqrt() * self.current(j_s)?)
    }

    /// di_EH/dj^s: analytic for the closed forms, fourth-order finite
    /// differences otherwise.
    pub fn current_slope(&self, j_s: f64) -> Result<f64> {
        let rx = self.rx;
        let slope = match self.model {
            EhModelKind::ClosedFormSingle => {
                let j = self.state.ambient[0] + j_s;
                if j == 0.0 && j_s == 0.0 {
                    // W₀ at the Lambert identity point x = I R_Σ / V_T.
                    let w = effective_saturation(&rx.junctions[0]) * rx.r_sigma() / rx.v_t;
                    1.0 / (1.0 + w)
                } else {
                    let i_sat = effective_saturation(&rx.junctions[0]);
                    let (_, w) =
                        single_diode_current(j + i_sat, i_sat, 1.0, rx.r_sigma() / rx.v_t);
                    1.0 / (1.0 + w)
                }
            }
            EhModelKind::ClosedFormMulti => {
                let n = self.state.info_junction;
                let i_sat = effective_saturation(&rx.junctions[n]);
                rx.v_t / rx.r_sigma() / (self.state.ambient[n] + j_s + i_sat)
            }
            _ => finite_difference(|x| self.current(x), j_s)?,
        };
        Ok(slope.max(0.0))
    }

    /// dP_harv/dj^s in W/A.
    pub fn power_slope(&self, j_s: f64) -> Result<f64> {
        let i = self.current(j_s)?;
        Ok((2.0 * self.rx.r_load * i * self.current_slope(j_s)?).max(0.0))
    }

    /// dx/dj^s in √W/A.
    pub fn output_slope(&self, j_s: f64) -> Result<f64> {
        Ok(self.rx.r_load.sqrt() * self.current_slope(j_s)?)
    }
}

/// Fourth-order finite difference with step max(1e-6·x, 1e-12); one-sided
/// near x = 0 so the stencil never leaves x >= 0.
fn finite_difference<F>(f: F, x: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let h = (1e-6 * x).max(1e-12);
    if x >= 2.0 * h {
        Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?) / (12.0 * h))
    } else {
        Ok((-25.0 * f(x)? + 48.0 * f(x + h)? - 36.0 * f(x + 2.0 * h)? + 16.0 * f(x + 3.0 * h)?
            - 3.0 * f(x + 4.0 * h)?)
            / (12.0 * h))
    }
}

/// dP_harv/dj^s at transmit power `s`.
pub fn dp_djs(
    model: EhModelKind,
    state: &PhotocurrentState,
    s: f64,
    rx: &ReceiverSpec,
) -> Result<f64> {
    check_state(state, rx, s)?;
    Harvester::new(model, state, rx)?.power_slope(state.info_current(s))
}

/// Single saturation current that best replaces the pair (I₁, I₂) over the
/// junction voltage range `[v_lo, v_hi]`: the minimizer of
/// ∫ |I₁e^{v/V_T} + I₂e^{v/2V_T} − I(e^{v/V_T} + e^{v/2V_T})| dv.
pub fn fit_saturation_current(
    junction: &JunctionSpec,
    v_t: f64,
    v_lo: f64,
    v_hi: f64,
) -> Result<f64> {
    if !(v_lo < v_hi) || v_hi / v_t > EXP_GUARD {
        return Err(Error::Config(format!(
            "fit range [{v_lo}, {v_hi}] V must be increasing and below the overflow guard"
        )));
    }
    let (i1, i2) = (junction.i_sat1, junction.i_sat2);
    if i1 == i2 {
        return Ok(i1);
    }
    let mismatch = |is: f64| -> f64 {
        integrate(
            |v| {
                let (e1, e2) = ((v / v_t).exp(), (0.5 * v / v_t).exp());
                (i1 * e1 + i2 * e2 - is * (e1 + e2)).abs()
            },
            v_lo,
            v_hi,
            QuadTolerance::new(1e-10, 0.0),
        )
        .unwrap_or(f64::INFINITY)
    };
    // The optimum is a weighted mean of I₁ and I₂; search in log space.
    let (lo, hi) = (i1.min(i2).ln(), i1.max(i2).ln());
    let (best, _) = golden_max(|u| -mismatch(u.exp()), lo, hi, 1e-12);
    Ok(best.exp())
}

/// Copy of `rx` with I₁ = I₂ set to the fitted value on every junction.
pub fn equalize_saturation_currents(rx: &ReceiverSpec, v_lo: f64, v_hi: f64) -> Result<ReceiverSpec> {
    let mut out = rx.clone();
    for jn in &mut out.junctions {
        let is = fit_saturation_current(jn, rx.v_t, v_lo, v_hi)?;
        jn.i_sat1 = is;
        jn.i_sat2 = is;
    }
    Ok(out)
}
