//! CSV and JSON emission with version/config headers and a resolved-config
//! echo beside every output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub struct OutputWriter {
    dir: PathBuf,
    version: String,
    config_line: String,
}

impl OutputWriter {
    /// Create the output directory, write the resolved-config echo, and
    /// return a writer that stamps every file with the version and config.
    pub fn new(dir: &Path, resolved_config: &str, config_line: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let echo = dir.join("config.resolved.txt");
        fs::write(&echo, format!("# gaplab {}\n{}\n", crate::VERSION, resolved_config))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            version: crate::VERSION.to_string(),
            config_line: config_line.to_string(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Comma-separated, header row, '.' decimal; two leading comment lines
    /// carry the artifact version and the resolved config.
    pub fn write_csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = fs::File::create(&path)?;
        writeln!(out, "# gaplab {}", self.version)?;
        writeln!(out, "# config: {}", self.config_line)?;
        writeln!(out, "{}", columns.join(","))?;
        for row in rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(path)
    }

    /// UTF-8 JSON with stable key order (struct declaration order), wrapped
    /// with the version and config echo.
    pub fn write_json<T: Serialize>(&self, name: &str, payload: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Wrapped<'a, T: Serialize> {
            version: &'a str,
            config: &'a str,
            data: &'a T,
        }
        let path = self.dir.join(name);
        let wrapped = Wrapped { version: &self.version, config: &self.config_line, data: payload };
        let mut body = serde_json::to_string_pretty(&wrapped)
            .map_err(|e| crate::GapError::Io(std::io::Error::other(e)))?;
        body.push('\n');
        fs::write(&path, body)?;
        Ok(path)
    }
}

/// Render an f64 using Rust's shortest round-trip formatting: '.' decimal,
/// no locale, byte-stable across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
