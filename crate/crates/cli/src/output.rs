//! Rendering results with a metadata header and writing them atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance of one run: tool version, command and the parameters used.
/// Deliberately free of timestamps so reruns are byte-identical.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: &'static str,
    pub fields: Map<String, Value>,
}

impl Meta {
    pub fn new(command: &'static str) -> Self {
        Meta { command, fields: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.insert(key.to_owned(), value.into());
        self
    }

    pub fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), json!("gouq"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        m.extend(self.fields.clone());
        Value::Object(m)
    }

    /// `# key: value` lines.
    pub fn csv_header(&self) -> String {
        let mut out = format!("# gouq {}\n# command: {}\n", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.fields {
            out.push_str(&format!("# {k}: {}\n", serde_json::to_string(v).unwrap_or_default()));
        }
        out
    }
}

/// A JSON document `{"meta": ..., <body fields>}`.
pub fn json_document(meta: &Meta, body: Value) -> String {
    let mut doc = Map::new();
    doc.insert("meta".into(), meta.json());
    match body {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialise");
    s.push('\n');
    s
}

/// CSV with the metadata header, a column header and rows.
pub fn csv_document(meta: &Meta, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = meta.csv_header();
    if !columns.is_empty() {
        s.push_str(&columns.join(","));
        s.push('\n');
    }
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn temporary_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.partial", std::process::id()))
}

/// Writes `content` to `out` (stdout when `None`). Files are written to a
/// temporary sibling and renamed, so readers never see a partial file.
pub fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let tmp = temporary_path(path);
            let result = fs::write(&tmp, content).and_then(|_| fs::rename(&tmp, path));
            if result.is_err() {
                let _ = fs::remove_file(&tmp);
            }
            result.with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON number, or the strings `"inf"`/`"-inf"`/`"nan"` (which JSON lacks).
pub fn json_num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(num(x))
    }
}
