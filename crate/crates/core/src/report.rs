//! Deterministic report emission: canonical JSON with sorted keys and
//! floats rounded to 12 significant digits, plus a fixed-order CSV shape.
//!
//! Byte-reproducibility is part of the CLI contract: the same config and
//! seed must produce identical output files across runs.

use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};

/// Round to 12 significant digits (shortest round-trip formatting of the
/// rounded value is then stable across runs and platforms).
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

/// Output format of a CLI report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::Usage(format!("unknown format {s:?}; expected json or csv"))),
        }
    }
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    out.push_str(&fmt_float(f));
                } else {
                    out.push_str(&n.to_string());
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
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
            // serde_json maps are BTreeMap-backed: iteration is key-sorted
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}

/// Format a float at 12 significant digits using shortest-round-trip
/// notation of the rounded value.
pub fn fmt_float(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() {
        let mut s = format!("{r}");
        if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
            s.push_str(".0");
        }
        s
    } else {
        format!("\"{r}\"")
    }
}

/// Canonical JSON rendering: sorted keys, 12-significant-digit floats,
/// no whitespace, trailing newline.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out.push('\n');
    out
}

/// Serialize any value through the canonical renderer.
pub fn to_canonical_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)
        .map_err(|e| Error::Usage(format!("serialization failed: {e}")))?;
    Ok(canonical_json(&v))
}

/// Escape a CSV field (quote when it contains a comma, quote, or newline).
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render rows as CSV with a fixed header order.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding_keeps_12_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(1.5), 1.5);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-1234567.891234567), -1234567.89123);
    }

    #[test]
    fn canonical_json_is_sorted_and_stable() {
        let v = json!({"b": 2, "a": {"z": 1.0/3.0, "y": true}, "list": [1, 2.5]});
        let s = canonical_json(&v);
        assert_eq!(s, "{\"a\":{\"y\":true,\"z\":0.333333333333},\"b\":2,\"list\":[1,2.5]}\n");
        assert_eq!(s, canonical_json(&v));
    }

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(2.0), "2.0");
        assert_eq!(fmt_float(0.5), "0.5");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
    }

    #[test]
    fn csv_shapes() {
        let table = csv_table(
            &["n", "value"],
            &[vec!["1".into(), "a,b".into()], vec!["2".into(), "plain".into()]],
        );
        assert_eq!(table, "n,value\n1,\"a,b\"\n2,plain\n");
    }

    #[test]
    fn format_parsing() {
        assert_eq!(OutputFormat::from_str("json").unwrap(), OutputFormat::Json);
        assert_eq!(OutputFormat::from_str("csv").unwrap(), OutputFormat::Csv);
        assert!(OutputFormat::from_str("yaml").is_err());
    }
}
