use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Doubles with 17 significant digits, enough to round-trip exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV document: `#`-prefixed preamble (command, resolved config, extra
/// metadata), then a header row and data rows.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Self {
        let cfg = serde_json::to_string(config).expect("config serialises");
        Csv {
            text: format!("# sensornet {command}\n# config: {cfg}\n"),
        }
    }

    pub fn meta(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.text.push_str(&format!("# {key}: {value}\n"));
        self
    }

    pub fn header(mut self, columns: &[&str]) -> Self {
        self.row(columns.iter().map(|s| s.to_string()));
        self
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let line: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// A JSON document `{"config": ..., <fields>}`.
pub fn json_doc<C: Serialize>(config: &C, fields: Value) -> String {
    let mut map = Map::new();
    map.insert("config".into(), serde_json::to_value(config).expect("config serialises"));
    if let Value::Object(extra) = fields {
        map.extend(extra);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("valid json");
    s.push('\n');
    s
}

/// Writes `content` to `path` through a temporary file in the same directory
/// so a failure never leaves a truncated file behind; prints to stdout when
/// no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.persist(p).map_err(|e| CliError::Io(e.error))?;
        }
    }
    Ok(())
}
