use anyhow::Result;
use serde_json::{json, Value};

use remez_rigidity::extrema::CriticalPoint;
use remez_rigidity::gallery::GalleryReport;

use crate::commands::Output;

pub const SCHEMA: &str = "remez-rigidity/1";

/// Explicit CSV table replacing the generic key/value flattening.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn envelope(out: &Output, seed: u64) -> Value {
    json!({
        "schema": SCHEMA,
        "command": out.command,
        "seed": seed,
        "params": out.params,
        "result": out.result,
    })
}

/// Pretty JSON with sorted keys; parsing and re-emitting gives the same bytes.
pub fn json(out: &Output, seed: u64) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&envelope(out, seed))?;
    s.push('\n');
    Ok(s)
}

pub fn csv(out: &Output, seed: u64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match &out.table {
        Some(t) => {
            w.write_record(&t.header)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
        }
        None => {
            w.write_record(["key", "value"])?;
            let mut rows = Vec::new();
            flatten("", &envelope(out, seed), &mut rows);
            for (k, v) in rows {
                w.write_record([k, v])?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, rows)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, rows)),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn real(v: f64) -> String {
    Value::from(v).to_string()
}

fn label<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

pub fn gallery_table(r: &GalleryReport) -> Table {
    let header = ["quantity", "measured", "expected", "relation", "tolerance", "provenance", "status", "note"];
    Table {
        header: header.iter().map(|s| s.to_string()).collect(),
        rows: r
            .rows
            .iter()
            .map(|row| {
                vec![
                    row.quantity.clone(),
                    fmt_extended(row.measured),
                    fmt_extended(row.expected),
                    label(&row.relation),
                    real(row.tolerance),
                    label(&row.provenance),
                    label(&row.status),
                    row.note.clone().unwrap_or_default(),
                ]
            })
            .collect(),
    }
}

pub fn critical_table(n: usize, points: &[CriticalPoint]) -> Table {
    let mut header = vec!["kind".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend(["value".to_string(), "gradient_norm".to_string()]);
    Table {
        header,
        rows: points
            .iter()
            .map(|c| {
                let mut row = vec![label(&c.kind)];
                row.extend(c.location.iter().map(|v| real(*v)));
                row.extend([real(c.value), real(c.gradient_norm)]);
                row
            })
            .collect(),
    }
}

fn fmt_extended(v: f64) -> String {
    if v.is_finite() {
        real(v)
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
