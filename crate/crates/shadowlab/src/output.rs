//! Output directory handling: JSON with a reproducibility header, CSV tables and SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::svg::{render, Plot};

pub const GIT_DESCRIBE: &str = env!("SHADOWLAB_GIT_DESCRIBE");

/// Provenance block embedded in every JSON output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: Config,
}

impl Meta {
    pub fn new(command: &str, seed: u64, config: &Config) -> Self {
        Meta {
            tool: "shadowlab",
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            command: command.to_string(),
            seed,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Meta,
    result: &'a T,
}

/// A directory receiving run outputs; records every file written.
pub struct Output {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, meta: Meta) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `{"meta": …, "result": …}` pretty-printed.
    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(&Envelope { meta: &self.meta, result })
            .map_err(|e| CliError::config(format!("serializing {name}: {e}")))?;
        self.write(name, format!("{text}\n").as_bytes())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> CliResult<PathBuf> {
        let bytes = table.to_csv()?;
        self.write(name, &bytes)
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> CliResult<PathBuf> {
        self.write(name, render(plot).as_bytes())
    }
}

/// Header plus string rows; numbers use the shortest round-trip formatting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.into_inner().map_err(|e| CliError::config(format!("csv: {e}")))
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_has_header() {
        let t = Table::new(&["delta", "exact", "sampled", "se"]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "delta,exact,sampled,se\n");
    }

    #[test]
    fn numbers_round_trip() {
        let v = 0.1 + 0.2;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
        assert_eq!(opt(None), "");
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        let cfg = Config::parse("version = 1").unwrap();
        let err = Output::create(&file.join("sub"), Meta::new("t", 0, &cfg)).err().unwrap();
        assert_eq!(err.exit_code(), 4);
    }
}
