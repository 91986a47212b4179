//! JSON summaries and whitespace-separated tables.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde_json::{Map, Value};

/// A table with a fixed header; cells are written with `Display`.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<D: Display>(&mut self, cells: impl IntoIterator<Item = D>) {
        let row: Vec<String> = cells.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.header.join(" "));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(" "));
            out.push('\n');
        }
        std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
    }
}

/// `theta_1 … theta_n`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

pub struct Summary {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub passed: Option<bool>,
    pub result: Value,
}

impl Summary {
    pub fn to_json(&self, timestamp: bool) -> Result<String> {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command));
        m.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        m.insert("config".into(), self.config.clone());
        if let Some(seed) = self.seed {
            m.insert("seed".into(), Value::from(seed));
        }
        if let Some(p) = self.passed {
            m.insert("passed".into(), Value::from(p));
        }
        m.insert("result".into(), self.result.clone());
        if timestamp {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            m.insert("timestamp_unix".into(), Value::from(secs));
        }
        Ok(serde_json::to_string_pretty(&Value::Object(m))? + "\n")
    }

    pub fn emit(&self, out: Option<&Path>, timestamp: bool) -> Result<()> {
        let text = self.to_json(timestamp)?;
        match out {
            Some(p) => {
                std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(stdout.flush()?)
            }
        }
    }
}
