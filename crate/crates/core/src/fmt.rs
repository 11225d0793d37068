//! Output formatting shared by reports and the command line.

/// Rounds to nine significant digits so printed values are stable across
/// platforms and thread counts.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.8e}", x).parse().unwrap_or(x)
}

/// Nine-significant-digit text rendering used in CSV output.
pub fn sig9_str(x: f64) -> String {
    let r = sig9(x);
    if r == 0.0 {
        return "0".to_string();
    }
    let s = format!("{}", r);
    if s.len() > 18 {
        format!("{:.8e}", r)
    } else {
        s
    }
}

/// Recursively rounds every float in a JSON value.
pub fn round_json(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(m) = serde_json::Number::from_f64(sig9(x)) {
                        *n = m;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(1.0 / 3.0), 0.333333333);
        assert_eq!(sig9(2.0), 2.0);
        assert_eq!(sig9_str(1.7264123456e-4), "0.000172641235");
        assert_eq!(sig9_str(0.0), "0");
    }
}
