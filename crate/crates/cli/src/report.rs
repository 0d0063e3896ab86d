//! Run reports and their two renderings.
//!
//! The tabular rendering is a flattening of the structured one: each leaf of
//! the JSON tree becomes a `path<TAB>value` line, with numbers printed by the
//! same formatter, so both carry identical numeric text.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::exit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Structured,
    Tabular,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_user: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dedup: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub parameters: Parameters,
    pub results: Map<String, Value>,
    pub diagnostics: Vec<String>,
    pub failures: Vec<Failure>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: Parameters::default(),
            results: Map::new(),
            diagnostics: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn set<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.results.insert(key.to_string(), v);
    }

    pub fn fail(&mut self, check: impl Into<String>, detail: impl Into<String>) {
        self.failures.push(Failure {
            check: check.into(),
            detail: detail.into(),
        });
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            exit::OK
        } else {
            exit::BOUND_VIOLATION
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn render(&self, format: Format) -> String {
        render_value(&self.to_value(), format)
    }
}

pub fn render_value(v: &Value, format: Format) -> String {
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(v).expect("value serializes");
            s.push('\n');
            s
        }
        Format::Tabular => {
            let mut out = String::from("key\tvalue\n");
            for (k, val) in flatten(v) {
                let _ = writeln!(out, "{k}\t{val}");
            }
            out
        }
    }
}

/// Leaf paths and their printed values, in document order.
pub fn flatten(v: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    flatten_into(v, String::new(), &mut out);
    out
}

fn flatten_into(v: &Value, path: String, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                flatten_into(child, p, out);
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push((path, "[]".into()));
                return;
            }
            for (i, child) in items.iter().enumerate() {
                flatten_into(child, format!("{path}[{i}]"), out);
            }
        }
        Value::String(s) => out.push((path, s.replace(['\t', '\n'], " "))),
        other => out.push((path, other.to_string())),
    }
}

/// Reads the tabular rendering back into `(path, value)` pairs.
pub fn parse_tabular(text: &str) -> Vec<(String, String)> {
    text.lines()
        .skip(1)
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
