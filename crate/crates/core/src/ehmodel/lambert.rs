//! Principal branch of the Lambert-W function, evaluated from the logarithm
//! of its argument.
//!
//! The single-junction model needs W₀(c·exp(R_Σ j / V_T)) where the exponent
//! reaches 10⁴ for mA currents, so the argument itself is never formed.
//! Instead we solve `w + ln w = y` for `y = ln(argument)`.

/// Returns `w > 0` with `w e^w = e^y`.
///
/// Accurate to a few ulps over the whole real line; for `y` below the
/// smallest normal exponent the result underflows gracefully to `e^y`.
pub fn lambert_w0_exp(y: f64) -> f64 {
    if y.is_nan() {
        return f64::NAN;
    }
    if y == f64::INFINITY {
        return f64::INFINITY;
    }
    if y < -40.0 {
        // W(x) = x - x² + ..., and x² is below one ulp of x here.
        let x = y.exp();
        return x - x * x;
    }

    let mut w = if y > 3.0 {
        let ly = y.ln();
        y - ly + ly / y
    } else {
        let x = y.exp();
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    };

    // Halley's iteration on f(w) = w + ln w - y.
    for _ in 0..64 {
        let f = w + w.ln() - y;
        let fp = 1.0 + 1.0 / w;
        let fpp = -1.0 / (w * w);
        let step = f / fp / (1.0 - 0.5 * f * fpp / (fp * fp));
        let next = if w - step > 0.0 { w - step } else { 0.5 * w };
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next;
        w = next;
        if done {
            break;
        }
    }
    w
}

/// Lambert W₀ of a positive, finite argument.
pub fn lambert_w0(x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NAN };
    }
    lambert_w0_exp(x.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definitional_identity() {
        for x in [1.0, 2.5, 10.0] {
            let w = lambert_w0_exp(x + f64::ln(x));
            assert!((w - x).abs() <= 1e-12 * x, "x = {x}, w = {w}");
        }
    }

    #[test]
    fn omega_constant() {
        // Newton on w e^w = 1, oracle independent of the log-domain solver.
        let mut w: f64 = 0.5;
        for _ in 0..50 {
            w -= (w * w.exp() - 1.0) / ((1.0 + w) * w.exp());
        }
        assert!((lambert_w0_exp(0.0) - w).abs() < 1e-15);
        assert!((lambert_w0_exp(0.0) - 0.567_143_290_4).abs() < 1e-9);
    }

    #[test]
    fn large_log_argument() {
        // Fixed point w = y - ln w.
        let y = 700.0;
        let mut w: f64 = y;
        for _ in 0..200 {
            w = y - w.ln();
        }
        let got = lambert_w0_exp(y);
        assert!((got - w).abs() <= 1e-12 * w);
        assert!((got - 693.458_308_9).abs() < 1e-4);
        // Far outside the range of exp().
        let y = 1e5;
        let w = lambert_w0_exp(y);
        assert!((w + w.ln() - y).abs() <= 1e-10 * y);
    }

    #[test]
    fn tiny_arguments() {
        assert_eq!(lambert_w0(0.0), 0.0);
        let x = 1e-20;
        assert!((lambert_w0(x) - x).abs() <= 1e-30);
        let y = -1000.0;
        assert!(lambert_w0_exp(y) >= 0.0);
        for y in [-39.0, -20.0, -5.0, -0.3, 1.0, 2.9, 3.1, 50.0] {
            let w = lambert_w0_exp(y);
            assert!(((w + w.ln()) - y).abs() <= 1e-14 * y.abs().max(1.0), "y = {y}");
        }
    }
}
