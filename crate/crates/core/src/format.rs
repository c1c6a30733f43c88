//! Text helpers shared by the line-oriented file formats and the wire protocol.

/// Formats a number so that it parses back to the identical `f64` and
/// carries at least six significant digits.
///
/// Non-finite values are written as `inf`, `-inf` or `nan`.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let mut s = format!("{v}");
    let digits = significant_digits(&s);
    if digits < 6 {
        if !s.contains('.') {
            s.push('.');
        }
        for _ in digits..6 {
            s.push('0');
        }
    }
    s
}

fn significant_digits(s: &str) -> usize {
    let mut seen_nonzero = false;
    let mut count = 0;
    for c in s.chars() {
        if let Some(d) = c.to_digit(10) {
            if d != 0 {
                seen_nonzero = true;
            }
            if seen_nonzero {
                count += 1;
            }
        }
    }
    // "0" still has one significant digit as far as readers are concerned.
    count.max(1)
}

/// Parses a finite decimal number.
pub fn parse_finite(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Labels (scene ids, region ids, object categories) are restricted to a
/// token alphabet so they can be embedded in space- and colon-separated records.
pub fn is_label(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}
