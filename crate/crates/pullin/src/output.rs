//! CSV and JSON artifacts.
//!
//! Every artifact starts from the resolved configuration hash: CSV files carry it on a
//! leading `# config-sha256:` comment line, JSON documents in a `config_sha256` field.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{Format, Setup};

/// Formats a double with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Writes the artifacts of one run into a directory.
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    csv: bool,
    json: bool,
    written: Vec<PathBuf>,
}

impl Artifacts {
    /// Creates the directory and writes `resolved-config.json`.
    pub fn create(dir: &Path, setup: &Setup) -> io::Result<Artifacts> {
        fs::create_dir_all(dir)?;
        let path = dir.join("resolved-config.json");
        fs::write(&path, setup.resolved_json())?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            hash: setup.hash(),
            csv: setup.writes(Format::Csv),
            json: setup.writes(Format::Json),
            written: vec![path],
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes a CSV table; rows must match the header width.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        if !self.csv {
            return Ok(());
        }
        let mut s = format!("# config-sha256: {}\n{}\n", self.hash, header.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.write(name, s)
    }

    /// Writes a JSON object with the config hash added.
    pub fn json(&mut self, name: &str, mut value: Value) -> io::Result<()> {
        if !self.json {
            return Ok(());
        }
        value
            .as_object_mut()
            .expect("artifacts are JSON objects")
            .insert("config_sha256".into(), Value::String(self.hash.clone()));
        let mut s = serde_json::to_string_pretty(&value).map_err(io::Error::other)?;
        s.push('\n');
        self.write(name, s)
    }

    fn write(&mut self, name: &str, contents: String) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }
}

/// JSON number, or `null` for non-finite values.
pub fn jnum(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
