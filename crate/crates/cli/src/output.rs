//! Number formatting shared by the CSV and JSON writers.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

/// Significant digits written for every floating-point value.
pub const DIGITS: usize = 12;

/// Rounds to [`DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", DIGITS - 1, v).parse().unwrap_or(v)
}

/// Shortest decimal that round-trips the rounded value, so `1000.5` rather than `1.00050000000e3`.
pub fn fmt_f64(v: f64) -> String {
    let r = round_sig(v);
    if r.is_finite() && r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else if r == 0.0 || (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(m) = serde_json::Number::from_f64(round_sig(x)) {
                *n = m;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to [`DIGITS`] significant digits.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    serde_json::to_writer_pretty(&mut out, &v)?;
    writeln!(out)?;
    Ok(())
}
