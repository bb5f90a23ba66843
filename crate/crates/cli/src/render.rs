//! Turns serializable records into JSON, CSV or an aligned text table.
//!
//! JSON is written straight from the record, so field order and the
//! 17-digit float format come from the library types. CSV and the table are
//! built from the same JSON value with nested objects flattened into dotted
//! column names, which keeps the three renderings in step.

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

fn flatten_into(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&key, v, out);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(cell).collect();
            out.push((prefix.to_string(), parts.join(";")));
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Object(_) | Value::Array(_) => v.to_string(),
        other => other.to_string(),
    }
}

fn flatten(value: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match value {
        Value::Object(_) => flatten_into("", value, &mut out),
        other => out.push(("value".to_string(), cell(other))),
    }
    out
}

fn rows_of(value: &Value) -> Vec<Vec<(String, String)>> {
    match value {
        Value::Array(items) => items.iter().map(flatten).collect(),
        other => vec![flatten(other)],
    }
}

fn to_csv(value: &Value) -> Result<String, CliError> {
    let rows = rows_of(value);
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        w.write_record(first.iter().map(|(k, _)| k.as_str()))?;
    }
    for row in &rows {
        w.write_record(row.iter().map(|(_, v)| v.as_str()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv output failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_table(value: &Value) -> String {
    let rows = rows_of(value);
    let mut out = String::new();
    if rows.len() == 1 {
        let width = rows[0].iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &rows[0] {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        return out;
    }
    let Some(header) = rows.first() else { return out };
    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(i, (k, _))| rows.iter().map(|r| r.get(i).map_or(0, |(_, v)| v.len())).max().unwrap_or(0).max(k.len()))
        .collect();
    let line = |cells: Vec<&str>| -> String {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string() + "\n"
    };
    out.push_str(&line(header.iter().map(|(k, _)| k.as_str()).collect()));
    for row in &rows {
        out.push_str(&line(row.iter().map(|(_, v)| v.as_str()).collect()));
    }
    out
}

/// Renders `record` in the requested format; JSON ends with a newline.
pub fn render<T: Serialize>(record: &T, format: Format) -> Result<String, CliError> {
    let json = serde_json::to_string_pretty(record)?;
    match format {
        Format::Json => Ok(json + "\n"),
        Format::Csv => to_csv(&serde_json::from_str(&json)?),
        Format::Table => Ok(to_table(&serde_json::from_str(&json)?)),
    }
}
