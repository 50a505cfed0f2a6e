use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA: u32 = 1;
pub const OUT_DIR_ENV: &str = "QCANTOR_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A rendered artifact: either a CSV table or a JSON document.
pub enum Artifact {
    Csv {
        header: Vec<&'static str>,
        rows: Vec<Vec<String>>,
    },
    Json(Value),
}

impl Artifact {
    pub fn csv(header: &[&'static str]) -> Self {
        Artifact::Csv {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        if let Artifact::Csv { header, rows } = self {
            debug_assert_eq!(row.len(), header.len());
            rows.push(row);
        }
    }

    pub fn render(&self) -> Result<Vec<u8>> {
        match self {
            Artifact::Csv { header, rows } => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header)?;
                for r in rows {
                    w.write_record(r)?;
                }
                Ok(w.into_inner().context("flushing CSV")?)
            }
            Artifact::Json(v) => {
                let mut buf = serde_json::to_vec_pretty(v)?;
                buf.push(b'\n');
                Ok(buf)
            }
        }
    }
}

/// Wraps a command result with the metadata needed to reproduce it.
pub fn envelope(command: &str, config: &impl Serialize, seed: u64, result: Value) -> Value {
    json!({
        "schema": SCHEMA,
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "config": config,
        "result": result,
    })
}

/// `null` for non-finite values, the number otherwise.
pub fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Resolves where output goes: explicit path, then `$QCANTOR_OUT_DIR`,
/// otherwise stdout (`None`).
pub fn destination(explicit: Option<&Path>, command: &str, format: Format) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(format!("{command}.{}", format.extension())))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn emit(bytes: &[u8], dest: Option<&Path>) -> Result<()> {
    match dest {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
