//! Small shared helpers: report number formatting and canonical rounding.

/// Formats a float with 9 significant digits, the fixed width used by every
/// emitted CSV/JSONL number.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{:.8e}", x)
}

/// Rounds a value to the 9-significant-digit grid used in reports.
///
/// Recorded curve values are canonicalized with this before aggregation, so
/// that recomputing aggregates from a re-read report reproduces the original
/// aggregate files exactly.
pub fn canon9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    fmt_sig9(x).parse().expect("sig9 output always re-parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canon9_is_idempotent() {
        for &x in &[0.0, 1.0, -2.5, 0.1 + 0.2, 1.0 / 3.0, 1e-30, 7.25e18] {
            let once = canon9(x);
            assert_eq!(once, canon9(once));
            assert_eq!(fmt_sig9(once), fmt_sig9(canon9(once)));
        }
    }

    #[test]
    fn format_round_trips() {
        let x = 0.23333333333333334;
        let s = fmt_sig9(x);
        let y: f64 = s.parse().unwrap();
        assert_eq!(fmt_sig9(y), s);
    }
}
