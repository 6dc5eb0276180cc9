//! C-style number formatting for the CSV outputs (`%.17g` for coordinates,
//! `%.6e` for scores), which Rust's formatter does not reproduce directly.

fn non_finite(v: f64) -> Option<&'static str> {
    if v.is_nan() {
        Some("NaN")
    } else if v == f64::INFINITY {
        Some("Inf")
    } else if v == f64::NEG_INFINITY {
        Some("-Inf")
    } else {
        None
    }
}

fn split_exp(s: &str) -> (&str, i32) {
    let (mant, exp) = s.split_once('e').expect("scientific notation");
    (mant, exp.parse().expect("integer exponent"))
}

fn c_exponent(exp: i32) -> String {
    let sign = if exp < 0 { '-' } else { '+' };
    format!("e{sign}{:02}", exp.unsigned_abs())
}

/// Formats like C's `%.6e`, e.g. `9.890000e-03`.
pub fn sci6(v: f64) -> String {
    if let Some(s) = non_finite(v) {
        return s.to_string();
    }
    let s = format!("{v:.6e}");
    let (mant, exp) = split_exp(&s);
    format!("{mant}{}", c_exponent(exp))
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats like C's `%.17g`, which round-trips every finite double.
pub fn g17(v: f64) -> String {
    const PRECISION: i32 = 17;
    if let Some(s) = non_finite(v) {
        return s.to_string();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let s = format!("{v:.*e}", (PRECISION - 1) as usize);
    let (mant, exp) = split_exp(&s);
    if (-4..PRECISION).contains(&exp) {
        let fixed = format!("{v:.*}", (PRECISION - 1 - exp) as usize);
        strip_zeros(&fixed).to_string()
    } else {
        format!("{}{}", strip_zeros(mant), c_exponent(exp))
    }
}
