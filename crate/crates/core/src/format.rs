//! Text formatting for CSV output.

/// Shortest decimal string that parses back to the same `f64`. Plain
/// notation for moderate magnitudes, exponent notation otherwise.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Empty for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for v in [0.0, -0.0, 1.0, 0.1, -2.5e-7, 1e300, 123456.789, 6.02e23, f64::MIN_POSITIVE, 1e-4, 9.999e15] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn compact_forms() {
        assert_eq!(fmt_float(0.5), "0.5");
        assert_eq!(fmt_float(1e-7), "1e-7");
        assert_eq!(fmt_float(3.0), "3");
        assert_eq!(fmt_float(2e20), "2e20");
        assert_eq!(fmt_opt(None), "");
    }
}
