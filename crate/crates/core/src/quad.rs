//! Small numerical building blocks shared by the model modules: adaptive
//! Simpson quadrature, golden-section maximization and bracketed bisection.

use crate::error::{solver_err, Error, Result};

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub rel: f64,
    pub abs: f64,
    /// Number of equal panels the interval is cut into before adaptation.
    pub panels: usize,
    pub max_depth: u32,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        QuadTolerance {
            rel: 1e-9,
            abs: 1e-18,
            panels: 16,
            max_depth: 48,
        }
    }
}

impl QuadTolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        QuadTolerance {
            rel,
            abs,
            ..Default::default()
        }
    }
}

/// Integrates `f` over `[a, b]` with adaptive Simpson and Richardson correction.
///
/// The global error budget is `max(rel * |coarse estimate|, abs)`, split across
/// panels in proportion to their width. Non-finite integrand values are
/// reported as [`Error::Numeric`].
pub fn integrate<F>(f: F, a: f64, b: f64, tol: QuadTolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let panels = tol.panels.max(1);
    let width = (b - a) / panels as f64;

    let mut pieces = Vec::with_capacity(panels);
    let mut coarse = 0.0;
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = simpson(lo, hi, flo, fmid, fhi);
        coarse += whole.abs();
        pieces.push((lo, hi, flo, fmid, fhi, whole));
    }
    let budget = (tol.rel * coarse).max(tol.abs);

    let mut total = 0.0;
    for (lo, hi, flo, fmid, fhi, whole) in pieces {
        let eps = budget * (hi - lo) / (b - a);
        total += adapt(&f, lo, hi, flo, fmid, fhi, whole, eps, tol.max_depth)?;
    }
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "quadrature over [{a:e}, {b:e}] produced {total}"
        )));
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    if !(flm.is_finite() && frm.is_finite() && fa.is_finite() && fb.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite integrand near x = {m:e}"
        )));
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Stop when converged, out of depth, or the panel no longer splits.
    if depth == 0 || delta.abs() <= 15.0 * eps || lm <= a || rm >= b {
        return Ok(left + right + delta / 15.0);
    }
    Ok(adapt(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)?
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The interior probes can beat the midpoint by rounding.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, p| if p.1 > best.1 { p } else { best })
}

/// Bisection on a bracket where `f(lo)` and `f(hi)` have opposite signs (or
/// one of them is zero). Stops when the bracket width falls below
/// `max(rel * |x|, abs)` or cannot shrink any further.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, rel: f64, abs: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(solver_err(
            "bisection",
            format!("no sign change on [{lo:e}, {hi:e}]: f = ({flo:e}, {fhi:e})"),
        ));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let width = hi - lo;
        if mid <= lo || mid >= hi || width <= (rel * mid.abs()).max(abs) {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `n` log-spaced points from `a` to `b` inclusive (both positive).
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n)
                .map(|k| {
                    if k == 0 {
                        a
                    } else if k + 1 == n {
                        b
                    } else {
                        (la + (lb - la) * k as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| {
                if k + 1 == n {
                    b
                } else {
                    a + (b - a) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
