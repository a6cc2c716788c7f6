//! Six-significant-digit float rendering for reports.

/// Formats `x` with six significant digits in `%g` style: fixed notation
/// for exponents in `[-4, 6)`, scientific otherwise, trailing zeros removed.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    if x == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{:.5e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if x < 0.0 { "-" } else { "" };
    let body = if !(-4..6).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        if tail.is_empty() {
            format!("{head}e{exp}")
        } else {
            format!("{head}.{tail}e{exp}")
        }
    } else if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int.to_owned()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{}", digits.trim_end_matches('0'))
    };
    format!("{sign}{body}")
}

/// Rounds `x` to the value [`format_sig6`] prints.
pub fn round_sig6(x: f64) -> f64 {
    if x.is_finite() {
        format_sig6(x).parse().expect("formatted float parses")
    } else {
        x
    }
}
