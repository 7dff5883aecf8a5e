//! Stable JSON rendering: sorted keys, floats at 12 significant digits,
//! two-space indentation and a trailing newline.

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits through a decimal
/// round trip, so the printed form is locale- and platform-independent.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Short text form of a float at [`SIGNIFICANT_DIGITS`] significant digits.
pub fn format_float(x: f64) -> String {
    let r = round_significant(x);
    if r.is_finite() && r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Rewrites every float in `value` to its rounded form. Keys are already
/// sorted because `serde_json::Map` is a `BTreeMap` without `preserve_order`.
pub fn normalize(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| Number::from_f64(round_significant(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn to_stable_value<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    serde_json::to_value(value)
        .map(normalize)
        .map_err(|e| Error::Parse(format!("serializing: {e}")))
}

pub fn to_stable_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = to_stable_value(value)?;
    let mut out = serde_json::to_string_pretty(&v).map_err(|e| Error::Parse(format!("serializing: {e}")))?;
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_significant(0.1 + 0.2), 0.3);
        assert_eq!(round_significant(1.234_567_890_123_456), 1.234_567_890_12);
        assert_eq!(round_significant(-0.0), 0.0);
        assert_eq!(round_significant(1938396.0), 1938396.0);
        assert!(round_significant(f64::INFINITY).is_infinite());
    }

    #[test]
    fn sorted_and_rounded_output() {
        let v = json!({"b": 0.1 + 0.2, "a": [1, 2.000_000_000_000_1], "c": {"z": 1, "y": f64::NAN}});
        let s = to_stable_string(&v).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [\n    1,\n    2.0\n  ],\n  \"b\": 0.3,\n  \"c\": {\n    \"y\": null,\n    \"z\": 1\n  }\n}\n"
        );
    }

    #[test]
    fn float_text() {
        assert_eq!(format_float(45.0), "45");
        assert_eq!(format_float(0.004_066_999_999_999_9), "0.004067");
        assert_eq!(format_float(f64::NAN), "NaN");
    }
}
