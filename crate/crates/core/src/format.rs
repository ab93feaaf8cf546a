//! Text formatting for tabular output.

use std::fmt::Write;

/// Shortest representation that parses back to exactly `v`.
///
/// Plain decimal notation for 1e-4 <= |v| < 1e7 (and zero), scientific
/// notation otherwise, so grids spanning many decades stay readable.
pub fn float(v: f64) -> String {
    let mut s = String::new();
    write_float(&mut s, v);
    s
}

pub fn write_float(out: &mut String, v: f64) {
    let a = v.abs();
    // write! into a String cannot fail.
    if v == 0.0 || !v.is_finite() || (1e-4..1e7).contains(&a) {
        let _ = write!(out, "{v}");
    } else {
        let _ = write!(out, "{v:e}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for v in [0.0, 1.0, -2.5, 1e-4, 9.999e6, 1e7, 1.234e-19, 0.1 + 0.2, -3.3e300] {
            let s = float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(float(1e-9), "1e-9");
        assert_eq!(float(0.25), "0.25");
        assert_eq!(float(1.5e7), "1.5e7");
    }
}
