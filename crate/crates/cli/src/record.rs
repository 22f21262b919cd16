use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of one logical check or experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub version: String,
    /// Named scalar metrics; names use `[a-z0-9_]`.
    pub results: BTreeMap<String, f64>,
    pub pass: Option<bool>,
    pub wall_time_ms: u64,
}

impl RunRecord {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            params: BTreeMap::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            results: BTreeMap::new(),
            pass: None,
            wall_time_ms: 0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn metric(&mut self, name: &str, value: f64) -> &mut Self {
        debug_assert!(name
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'));
        self.results.insert(name.to_string(), value);
        self
    }

    pub fn flag(&mut self, name: &str, value: bool) -> &mut Self {
        self.metric(name, if value { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Seventeen significant digits, so every double round-trips.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_json(out: &mut String, v: &Value) {
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => {
                let _ = write!(out, "{i}");
            }
            (_, Some(u), _) => {
                let _ = write!(out, "{u}");
            }
            (_, _, Some(f)) => out.push_str(&format_float(f)),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push('{');
            for (i, (k, item)) in sorted.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_json(out, item);
            }
            out.push('}');
        }
    }
}

fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Renders a record as one line of JSON (sorted keys, non-finite floats as
/// `null`) or as `name,value` CSV rows.
pub fn emit(record: &RunRecord, format: Format) -> String {
    match format {
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("command".into(), Value::String(record.command.clone()));
            obj.insert(
                "params".into(),
                Value::Object(record.params.clone().into_iter().collect()),
            );
            obj.insert("seed".into(), Value::from(record.seed));
            obj.insert("version".into(), Value::String(record.version.clone()));
            obj.insert(
                "results".into(),
                Value::Object(
                    record
                        .results
                        .iter()
                        .map(|(k, &v)| (k.clone(), float_value(v)))
                        .collect(),
                ),
            );
            obj.insert("pass".into(), record.pass.map_or(Value::Null, Value::Bool));
            obj.insert("wall_time_ms".into(), Value::from(record.wall_time_ms));
            let mut out = String::new();
            write_json(&mut out, &Value::Object(obj));
            out.push('\n');
            out
        }
        Format::Csv => {
            let mut out = String::from("name,value\n");
            for (k, &v) in &record.results {
                let _ = writeln!(out, "{k},{}", format_float(v));
            }
            if let Some(p) = record.pass {
                let _ = writeln!(out, "pass,{}", u8::from(p));
            }
            out
        }
    }
}
