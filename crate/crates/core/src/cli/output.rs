//! Report serialization: versioned JSON envelopes and LF-terminated CSV.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};

/// Bumped whenever a JSON report changes shape.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_at(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_at(path, e))
}

pub fn write_json<T: Serialize>(
    path: &Path,
    command: &str,
    cfg: &RunConfig,
    body: &T,
) -> Result<()> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        config: cfg,
        body,
    };
    let mut text = serde_json::to_string_pretty(&env)
        .map_err(|e| Error::InvalidArgument(format!("json encoding: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::io::Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv encoding: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv encoding: {e}")))?;
    write_text(
        path,
        &String::from_utf8(bytes).expect("csv output is utf-8"),
    )
}

/// Canonical number cell; undefined values print as `undefined`.
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}
