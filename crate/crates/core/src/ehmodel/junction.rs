//! Output current of one p-n junction and its inverse.

use crate::error::{solver_err, Error, Result};
use crate::spectral::JunctionSpec;

/// Largest exponent argument evaluated before reporting saturation.
pub const EXP_GUARD: f64 = 700.0;

fn guarded(arg: f64) -> Result<f64> {
    if arg > EXP_GUARD {
        Err(Error::Saturation {
            argument: arg,
            positive: true,
        })
    } else {
        Ok(arg)
    }
}

fn shunt_current(v: f64, r_sh: f64) -> f64 {
    if r_sh.is_infinite() {
        0.0
    } else {
        v / r_sh
    }
}

/// Φ(v) = j − I₁(e^{v/V_T} − 1) − I₂(e^{v/2V_T} − 1) − v/R_sh.
pub fn phi(v: f64, junction: &JunctionSpec, j: f64, v_t: f64) -> Result<f64> {
    let a = guarded(v / v_t)?;
    Ok(j - junction.i_sat1 * a.exp_m1()
        - junction.i_sat2 * (0.5 * a).exp_m1()
        - shunt_current(v, junction.r_sh))
}

/// dΦ/dv, strictly negative.
pub fn phi_slope(v: f64, junction: &JunctionSpec, v_t: f64) -> Result<f64> {
    let a = guarded(v / v_t)?;
    let g_sh = if junction.r_sh.is_infinite() {
        0.0
    } else {
        1.0 / junction.r_sh
    };
    Ok(-junction.i_sat1 / v_t * a.exp() - junction.i_sat2 / (2.0 * v_t) * (0.5 * a).exp() - g_sh)
}

/// The unique voltage with Φ(v) = i.
///
/// Brackets the root analytically, then runs Newton's method from the upper
/// end. Φ is concave and decreasing, so from the right the iterates approach
/// the root monotonically; bisection takes over whenever rounding throws a
/// step out of the bracket.
pub fn phi_inverse(i: f64, junction: &JunctionSpec, j: f64, v_t: f64) -> Result<f64> {
    if !(i.is_finite() && j.is_finite()) {
        return Err(Error::Domain(format!("phi_inverse(i = {i}, j = {j})")));
    }
    let (i1, i2) = (junction.i_sat1, junction.i_sat2);
    let excess = j - i;

    // Φ(hi) <= i: on v >= 0 every loss term is non-negative and the leading
    // diode alone already absorbs the excess.
    let hi = if excess <= 0.0 {
        0.0
    } else if i1 > 0.0 {
        v_t * (excess / i1).ln_1p()
    } else if i2 > 0.0 {
        2.0 * v_t * (excess / i2).ln_1p()
    } else if junction.r_sh.is_finite() {
        excess * junction.r_sh
    } else {
        return Err(solver_err("phi_inverse", "junction has no loss element"));
    };

    // Φ(lo) >= i: on v <= 0 the diode terms are positive, leaving the shunt.
    let lo = if excess >= 0.0 {
        0.0
    } else if junction.r_sh.is_finite() {
        excess * junction.r_sh
    } else {
        // Without a shunt Φ saturates at j + I₁ + I₂ for v → −∞.
        let room = excess + i1 + i2;
        if room <= 0.0 {
            return Err(solver_err(
                "phi_inverse",
                format!("current {i:e} A exceeds the junction limit {:e} A", j + i1 + i2),
            ));
        }
        2.0 * v_t * (room / (i1 + i2)).ln()
    };
    if lo == hi {
        return Ok(lo);
    }

    let (mut lo, mut hi) = (lo, hi);
    let mut v = hi;
    let mut f = phi(v, junction, j, v_t)? - i;
    if f == 0.0 {
        return Ok(v);
    }
    for _ in 0..400 {
        let slope = phi_slope(v, junction, v_t)?;
        let mut next = v - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let fn_ = phi(next, junction, j, v_t)? - i;
        if fn_ == 0.0 {
            return Ok(next);
        }
        if fn_ > 0.0 {
            lo = next;
        } else {
            hi = next;
        }
        let moved = (next - v).abs();
        v = next;
        f = fn_;
        if moved <= 2.0 * f64::EPSILON * v.abs()
            || hi - lo <= 2.0 * f64::EPSILON * v.abs()
            || f.abs() <= 0.5 * f64::EPSILON * (j.abs() + i.abs())
        {
            return Ok(v);
        }
    }
    Err(solver_err(
        "phi_inverse",
        format!("no convergence for i = {i:e} A, j = {j:e} A; bracket [{lo:e}, {hi:e}] V"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralBand;
    use proptest::prelude::*;

    const VT: f64 = 0.025_852;

    fn junction() -> JunctionSpec {
        JunctionSpec::reference(SpectralBand::from_nm(400.0, 1000.0).unwrap())
    }

    #[test]
    fn phi_at_zero_voltage_is_photocurrent() {
        assert_eq!(phi(0.0, &junction(), 3e-3, VT).unwrap(), 3e-3);
    }

    #[test]
    fn phi_two_diode_substitution() {
        let mut jn = junction();
        jn.r_sh = f64::INFINITY;
        let v = VT * 2f64.ln();
        let got = phi(v, &jn, 0.0, VT).unwrap();
        let expected = -(1.0 + (2f64.sqrt() - 1.0)) * 1e-9;
        assert!((got - expected).abs() < 1e-21, "{got:e}");
    }

    #[test]
    fn phi_overflow_guard() {
        let r = phi(800.0 * VT, &junction(), 0.0, VT);
        assert!(matches!(r, Err(Error::Saturation { positive: true, .. })));
    }

    #[test]
    fn inverse_of_photocurrent_is_zero_volts() {
        assert_eq!(phi_inverse(2e-3, &junction(), 2e-3, VT).unwrap(), 0.0);
    }

    #[test]
    fn open_circuit_voltage_matches_dense_scan() {
        let jn = junction();
        let j = 1e-3;
        let v_oc = phi_inverse(0.0, &jn, j, VT).unwrap();
        let upper = 2.0 * VT * (1.0 + j / 1e-9).ln();
        assert!(v_oc > 0.0 && v_oc < upper);

        // Brute-force sign-change scan over (0, upper).
        let n = 1_000_000;
        let mut prev = phi(0.0, &jn, j, VT).unwrap();
        let mut crossing = None;
        for k in 1..=n {
            let v = upper * k as f64 / n as f64;
            let cur = phi(v, &jn, j, VT).unwrap();
            if prev > 0.0 && cur <= 0.0 {
                crossing = Some((upper * (k - 1) as f64 / n as f64, v));
                break;
            }
            prev = cur;
        }
        let (a, b) = crossing.expect("sign change");
        assert!(v_oc >= a && v_oc <= b, "{v_oc} not in [{a}, {b}]");
    }

    #[test]
    fn no_inverse_without_shunt_above_limit() {
        let mut jn = junction();
        jn.r_sh = f64::INFINITY;
        assert!(phi_inverse(1e-3 + 3e-9, &jn, 1e-3, VT).is_err());
        let v = phi_inverse(1e-3 + 1e-9, &jn, 1e-3, VT).unwrap();
        assert!(v < 0.0);
    }

    proptest! {
        #[test]
        fn phi_strictly_decreasing(a in -2.0f64..1.0, b in -2.0f64..1.0, j in 0.0f64..0.1) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let jn = junction();
            prop_assert!(phi(lo, &jn, j, VT).unwrap() > phi(hi, &jn, j, VT).unwrap());
        }

        #[test]
        fn inverse_round_trip(i in -1e-3f64..0.1, j in 0.0f64..0.1) {
            let jn = junction();
            let v = phi_inverse(i, &jn, j, VT).unwrap();
            let back = phi(v, &jn, j, VT).unwrap();
            // Rounding floor of Φ itself is a few ulps of the largest term.
            let floor = 8.0 * f64::EPSILON * (j.abs() + i.abs() + 1e-9);
            prop_assert!((back - i).abs() <= (1e-12 * i.abs()).max(1e-15).max(floor),
                "i = {i:e}, back = {back:e}");
        }
    }
}
