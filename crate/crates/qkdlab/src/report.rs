//! Serialization helpers shared by the CLI: fixed-schema CSV rows and JSON
//! reports with a uniform numeric format.
//!
//! All numbers are rounded to 12 significant digits and printed in the
//! shortest form that round-trips to the rounded value, so output files are
//! byte-identical across runs and platforms and friendly to golden-file
//! diffing.

use crate::optimizer::SweepRow;
use serde::Serialize;
use serde_json::Value;

/// Fixed CSV header; column order is part of the output contract.
pub const CSV_HEADER: &str =
    "protocol,scenario,D,p,Q,N,m,eps_bar,eps_PE,eps_EC,eps_PA,SXE,HXY,zeta,aep,pa_corr,rate,status";

/// Round to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap()
}

/// Format with 12 significant digits, shortest round-trip form.
///
/// The value is first rounded to 12 significant digits; the shorter of the
/// decimal and exponent renderings of the rounded value is emitted (decimal
/// wins ties).
pub fn format_g12(v: f64) -> String {
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let r = round12(v);
    let plain = format!("{r}");
    let sci = format!("{r:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One newline-terminated CSV row in the fixed column order.
pub fn csv_row(row: &SweepRow) -> String {
    let nums = [
        row.d, row.p, row.q, row.n, row.m, row.eps_bar, row.eps_pe, row.eps_ec, row.eps_pa,
        row.sxe, row.hxy, row.zeta, row.aep, row.pa_corr, row.rate,
    ];
    let mut out = String::with_capacity(256);
    out.push_str(row.protocol.as_str());
    out.push(',');
    out.push_str(&row.scenario.to_string());
    for v in nums {
        out.push(',');
        out.push_str(&format_g12(v));
    }
    out.push(',');
    out.push_str(&csv_field(&row.status));
    out.push('\n');
    out
}

/// Render a full CSV table (header plus rows), deterministic row order.
pub fn csv_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_row(row));
    }
    out
}

fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return serde_json::Number::from_f64(round12(f))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
            Value::Number(n)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect())
        }
        other => other,
    }
}

/// JSON report: the fully resolved run configuration (defaults included) is
/// echoed next to the result so every output is reproducible from the file
/// alone. Floats are rounded to 12 significant digits.
pub fn json_report<C: Serialize, R: Serialize>(config: &C, result: &R) -> String {
    let body = serde_json::json!({
        "config": serde_json::to_value(config).unwrap(),
        "result": serde_json::to_value(result).unwrap(),
    });
    let mut s = serde_json::to_string_pretty(&round_numbers(body)).unwrap();
    s.push('\n');
    s
}
