//! Fixed numeric formatting: 12 significant digits, `%g` style.

/// Formats like C's `%.12g`.
pub fn sig12(v: f64) -> String {
    sig(v, 12)
}

pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let p = digits.max(1) as i32;
    let sci = format!("{:.*e}", (p - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= p {
        let m = trim(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p - 1 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 12 significant digits, for JSON output that must be
/// byte-stable.
pub fn round12(v: f64) -> f64 {
    sig12(v).parse().unwrap_or(v)
}

/// Applies [`round12`] to every number in a JSON value.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if !(n.is_i64() || n.is_u64()) {
                    if let Some(r) = serde_json::Number::from_f64(round12(f)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}
