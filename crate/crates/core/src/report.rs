//! Report serialization: JSON with a schema tag and every real printed with
//! 17 significant digits, so repeated runs produce byte-identical output.

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// `x` with 17 significant digits; `NaN`, `inf` and `-inf` for non-finite values.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.16e}");
        match s.split_once('e') {
            Some((mant, exp)) if !exp.starts_with('-') => format!("{mant}e+{exp}"),
            _ => s,
        }
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Rewrites every non-integer JSON number with [`sig17`]; non-finite floats are already `null`.
pub fn normalize_floats(value: Value) -> Value {
    match value {
        Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['.', 'e', 'E']) {
                let x: f64 = text.parse().expect("serde_json number parses as f64");
                Value::Number(sig17(x).parse::<Number>().expect("formatted float is valid JSON"))
            } else {
                Value::Number(n)
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(normalize_floats).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize_floats(v))).collect()),
        other => other,
    }
}

/// `{"schema": 1, ...fields of body}` with normalized floats.
pub fn to_json_value<S: Serialize>(body: &S) -> Result<Value> {
    let value = serde_json::to_value(body).map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    let mut root = serde_json::Map::new();
    root.insert("schema".into(), Value::from(SCHEMA_VERSION));
    match normalize_floats(value) {
        Value::Object(map) => root.extend(map),
        other => {
            root.insert("data".into(), other);
        }
    }
    Ok(Value::Object(root))
}

/// Pretty-printed JSON document with a trailing newline.
pub fn to_json_string<S: Serialize>(body: &S) -> Result<String> {
    let value = to_json_value(body)?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    Ok(text)
}
