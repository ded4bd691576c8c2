//! Canonical JSON text: sorted object keys, two-space indentation, floats in
//! exponent form with 17 significant digits, integers verbatim.
//!
//! Parsing canonical text and writing it back yields identical bytes.

use serde::Serialize;
use serde_json::Value;
use std::fmt::Write;

pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    Ok(value_to_canonical(&v))
}

pub fn value_to_canonical(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

/// `{:.16e}` round-trips every finite f64.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // normalizes -0.0 as well
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(out, &map[*k], level + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let v: Value = serde_json::json!({"b": [1, 2.5], "a": {"x": "q"}, "e": []});
        let s = value_to_canonical(&v);
        assert_eq!(
            s,
            "{\n  \"a\": {\n    \"x\": \"q\"\n  },\n  \"b\": [\n    1,\n    2.5000000000000000e0\n  ],\n  \"e\": []\n}\n"
        );
    }

    #[test]
    fn tenth_roundtrips() {
        let s = format_float(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), 0.1f64.to_bits());
    }

    proptest! {
        #[test]
        fn floats_roundtrip_bit_exact(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = format_float(x);
            let back: Value = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back.as_f64().unwrap().to_bits(), x.to_bits());
            prop_assert_eq!(value_to_canonical(&back), format!("{s}\n"));
        }
    }
}
