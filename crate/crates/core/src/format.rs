//! Number formatting shared by the CSV writers.

/// Fixed-point rendering with `sig` significant digits and no exponent.
pub fn fixed_sig(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() {
            "0".into()
        } else {
            format!("{v}")
        };
    }
    let mag = v.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.9999 -> 10.000
    let digits = s
        .trim_start_matches(['-', '0', '.'])
        .chars()
        .filter(char::is_ascii_digit)
        .count();
    if digits > sig && decimals > 0 {
        let d = decimals - 1;
        return format!("{v:.d$}");
    }
    s
}
