//! Output files. Every JSON document carries a `schema` tag naming its schema in
//! `schemas/`; wall-clock data only ever goes to `metadata.json`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use inls_core::{Field, PhysParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const METADATA_SCHEMA: &str = "inls.metadata.v1";

pub struct OutDir {
    pub path: PathBuf,
}

impl OutDir {
    pub fn create(path: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        Ok(Self { path })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn writer(&self, name: &str) -> Result<BufWriter<fs::File>, CliError> {
        let p = self.file(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        }
        fs::File::create(&p).map(BufWriter::new).map_err(|e| io_failure(&p, e))
    }

    pub fn field(&self, name: &str, field: &Field, params: &PhysParams) -> Result<(), CliError> {
        let mut w = self.writer(name)?;
        field.write_columnar(&mut w, params)?;
        w.flush().map_err(|e| io_failure(&self.file(name), e))
    }

    /// Pretty JSON with a `schema` key added to the top-level object.
    pub fn json<T: Serialize>(&self, name: &str, schema: &str, body: &T) -> Result<(), CliError> {
        let doc = tagged(schema, body)?;
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::Failure(e.to_string()))?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| io_failure(&self.file(name), e))
    }
}

pub fn io_failure(p: &Path, e: std::io::Error) -> CliError {
    CliError::Failure(format!("{}: {e}", p.display()))
}

pub fn tagged<T: Serialize>(schema: &str, body: &T) -> Result<Value, CliError> {
    let v = serde_json::to_value(body).map_err(|e| CliError::Failure(e.to_string()))?;
    let mut map = serde_json::Map::new();
    map.insert("schema".into(), Value::String(schema.into()));
    match v {
        Value::Object(inner) => map.extend(inner),
        other => {
            map.insert("body".into(), other);
        }
    }
    Ok(Value::Object(map))
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// What a finished command leaves behind besides its result files.
pub struct RunInfo {
    pub command: &'static str,
    pub started: f64,
    pub config: Value,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

impl RunInfo {
    pub fn new(command: &'static str, config: Value) -> Self {
        Self { command, started: unix_now(), config, notes: Vec::new(), files: Vec::new() }
    }

    pub fn write_metadata(&self, out: &OutDir, exit_code: i32) -> Result<(), CliError> {
        let finished = unix_now();
        let meta = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "parallel": inls_core::parallel::enabled(),
            "started_unix": self.started,
            "finished_unix": finished,
            "wall_seconds": finished - self.started,
            "exit_code": exit_code,
            "files": self.files,
            "notes": self.notes,
            "config": self.config,
        });
        out.json("metadata.json", METADATA_SCHEMA, &meta)
    }
}
