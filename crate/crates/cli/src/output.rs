use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use tempfile::NamedTempFile;

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Io,
    Parse,
    NotConverged,
    Validation,
}

impl FailureKind {
    pub fn exit_code(self) -> u8 {
        match self {
            FailureKind::Io => 1,
            FailureKind::Parse => 2,
            FailureKind::NotConverged => 3,
            FailureKind::Validation => 4,
        }
    }
}

impl Failure {
    pub fn new(kind: FailureKind, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind,
            error: error.into(),
        }
    }

    pub fn io(error: impl Into<anyhow::Error>) -> Self {
        Self::new(FailureKind::Io, error)
    }

    pub fn parse(error: impl Into<anyhow::Error>) -> Self {
        Self::new(FailureKind::Parse, error)
    }

    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        Self::new(FailureKind::Validation, error)
    }

    pub fn not_converged(error: impl Into<anyhow::Error>) -> Self {
        Self::new(FailureKind::NotConverged, error)
    }

    pub fn context(self, what: impl fmt::Display + Send + Sync + 'static) -> Self {
        Failure {
            kind: self.kind,
            error: self.error.context(what),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(e).context(format!("reading {}", path.display())))
}

/// Output directory; every file is written to a temporary sibling and
/// renamed into place.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| Failure::io(e).context(format!("creating {}", root.display())))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(rel);
        let dir = path.parent().unwrap_or(&self.root);
        let fail = |e: std::io::Error| Failure::io(e).context(format!("writing {}", path.display()));
        fs::create_dir_all(dir).map_err(fail)?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
        tmp.write_all(bytes).map_err(fail)?;
        tmp.persist(&path).map_err(|e| fail(e.error))?;
        self.written.push(rel.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> CliResult<()> {
        let mut bytes = text.as_bytes().to_vec();
        if !text.ends_with('\n') {
            bytes.push(b'\n');
        }
        self.write(rel, &bytes)
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(Failure::io)?;
        self.write_text(rel, &text)
    }

    pub fn write_csv<R, I>(&mut self, rel: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(Failure::io)?;
        for row in rows {
            w.write_record(row).map_err(Failure::io)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::io(anyhow::anyhow!("{e}")))?;
        self.write(rel, &bytes)
    }

    /// Writes `manifest.json` naming every file written so far.
    pub fn finish(mut self, manifest: Manifest) -> CliResult<()> {
        let missing: Vec<&String> = self.written.iter().filter(|f| !self.root.join(f).is_file()).collect();
        if !missing.is_empty() {
            return Err(Failure::io(anyhow::anyhow!("outputs vanished: {missing:?}")));
        }
        let record = ManifestRecord {
            command: manifest.command,
            inputs: manifest.inputs,
            overrides: manifest.overrides,
            seed: manifest.seed,
            out: self.root.display().to_string(),
            outputs: self.written.clone(),
            wall_clock_seconds: manifest.started.elapsed().as_secs_f64(),
            stats: manifest.stats,
        };
        self.write_json("manifest.json", &record)
    }
}

/// What a run read, how it was configured and what it measured.
pub struct Manifest {
    pub command: &'static str,
    pub inputs: BTreeMap<&'static str, String>,
    pub overrides: BTreeMap<&'static str, Value>,
    pub seed: Option<u64>,
    pub stats: BTreeMap<&'static str, Value>,
    pub started: Instant,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Manifest {
            command,
            inputs: BTreeMap::new(),
            overrides: BTreeMap::new(),
            seed: None,
            stats: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, name: &'static str, path: &Path) {
        self.inputs.insert(name, path.display().to_string());
    }

    pub fn set(&mut self, name: &'static str, value: impl Serialize) {
        self.overrides.insert(name, serde_json::to_value(value).expect("override serializes"));
    }

    pub fn stat(&mut self, name: &'static str, value: impl Serialize) {
        self.stats.insert(name, serde_json::to_value(value).expect("stat serializes"));
    }
}

#[derive(Serialize)]
struct ManifestRecord {
    command: &'static str,
    inputs: BTreeMap<&'static str, String>,
    overrides: BTreeMap<&'static str, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    out: String,
    outputs: Vec<String>,
    wall_clock_seconds: f64,
    stats: BTreeMap<&'static str, Value>,
}
