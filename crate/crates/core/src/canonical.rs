//! Canonical JSON and content digests.
//!
//! Canonical form: UTF-8, object keys sorted, no insignificant whitespace,
//! integers printed exactly, every float printed with 17 significant
//! digits in exponent form (`1.0000000000000000e0`). Two values that
//! serialize to the same canonical bytes have the same SHA-256 digest.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write;

/// Hex-encoded SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, &mut out);
    Ok(out)
}

/// Digest of the canonical serialization.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    Ok(sha256_hex(to_canonical_string(value)?.as_bytes()))
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // serde_json maps non-finite floats to null before we get here
        "null".to_string()
    }
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                write!(out, "{i}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(k, out);
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

fn write_string(s: &str, out: &mut String) {
    // serde_json's escaping is already canonical (minimal escapes)
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 0.24, "a": 3, "c": [true, null, "x"]});
        assert_eq!(
            to_canonical_string(&v).unwrap(),
            r#"{"a":3,"b":2.3999999999999999e-1,"c":[true,null,"x"]}"#
        );
    }

    #[test]
    fn integral_floats_stay_floats() {
        assert_eq!(to_canonical_string(&5.0_f64).unwrap(), "5.0000000000000000e0");
        assert_eq!(to_canonical_string(&-7_i64).unwrap(), "-7");
    }

    #[test]
    fn canonical_text_reparses_to_same_digest() {
        let v = json!({"z": {"y": 1.0e-300, "x": -2.5}, "w": "é\n"});
        let s = to_canonical_string(&v).unwrap();
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(digest(&back).unwrap(), sha256_hex(s.as_bytes()));
    }
}
