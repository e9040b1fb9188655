/// Formats `v` rounded to 9 significant digits, in the shortest decimal
/// form that reads back as the rounded value.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 {
            "0".to_string()
        } else {
            v.to_string()
        };
    }
    format!("{}", round_sig(v))
}

/// `v` rounded to 9 significant digits.
pub(crate) fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}
