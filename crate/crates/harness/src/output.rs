//! Artifact emission: every run writes into `<output_dir>/<mode>-<hash>/`
//! and finishes with a `manifest.json` listing the files it produced.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Mode, RunConfig};

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}
impl From<usize> for Field {
    fn from(x: usize) -> Self {
        Field::Int(x as i64)
    }
}
impl From<&str> for Field {
    fn from(x: &str) -> Self {
        Field::Text(x.to_string())
    }
}
impl From<String> for Field {
    fn from(x: String) -> Self {
        Field::Text(x)
    }
}

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a CSV document with a header row.
pub fn csv_string(header: &[&str], rows: &[Vec<Field>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        for (i, f) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            match f {
                Field::Num(x) => s.push_str(&fmt_float(*x)),
                Field::Int(x) => write!(s, "{x}").unwrap(),
                Field::Text(t) => s.push_str(t),
            }
        }
        s.push('\n');
    }
    s
}

/// SHA-256 of the effective configuration; the output location is not part
/// of it.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::new();
    let bytes = serde_json::to_vec(&c).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub kind: &'static str,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    mode: &'a str,
    config_hash: &'a str,
    artifacts: &'a [Artifact],
}

/// Run directory collecting the artifacts of one run.
#[derive(Debug)]
pub struct RunOutput {
    dir: PathBuf,
    mode: Mode,
    hash: String,
    artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn create(cfg: &RunConfig) -> Result<Self> {
        let hash = config_hash(cfg);
        let dir = cfg.output_dir.join(format!("{}-{}", cfg.mode(), &hash[..16]));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, mode: cfg.mode(), hash, artifacts: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn write_bytes(&mut self, name: &str, kind: &'static str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            kind,
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Field>]) -> Result<PathBuf> {
        self.write_bytes(name, "csv", csv_string(header, rows).as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).context("serializing json")?;
        s.push('\n');
        self.write_bytes(name, "json", s.as_bytes())
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// Writes `manifest.json` and returns the run directory.
    pub fn finish(self) -> Result<PathBuf> {
        let m = Manifest { mode: self.mode.name(), config_hash: &self.hash, artifacts: &self.artifacts };
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.dir)
    }
}
