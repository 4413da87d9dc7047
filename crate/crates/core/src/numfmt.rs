//! Fixed-precision number rendering shared by every text output format.
//!
//! Computed quantities are written with 9 significant digits so that files
//! produced on different machines compare byte-for-byte.

/// Significant digits used for computed values in all text formats.
pub const SIG_DIGITS: usize = 9;

/// Render `x` with [`SIG_DIGITS`] significant digits.
///
/// Magnitudes in `[1e-5, 1e9)` are written in positional notation with
/// trailing zeros removed; anything else uses `1.23456789e-7` style.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        // Re-render from the rounded mantissa so both notations agree on rounding.
        let rounded: f64 = sci.parse().expect("round-trippable");
        trim_zeros(format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

/// Round `x` to [`SIG_DIGITS`] significant digits.
pub fn round_sig9(x: f64) -> f64 {
    sig9(x).parse().unwrap_or(x)
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_string()
    } else {
        t.to_string()
    }
}
