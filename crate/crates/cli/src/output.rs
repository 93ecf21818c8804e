//! Artifact files and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Experiment;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV table built in memory; every row must match the header width.
#[derive(Clone, Debug)]
pub struct Table {
    width: usize,
    text: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let names: Vec<&str> = header.iter().map(|h| h.as_ref()).collect();
        Table { width: names.len(), text: names.join(",") + "\n" }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        assert_eq!(cells.len(), self.width, "row width differs from the header");
        let cells: Vec<&str> = cells.iter().map(|c| c.as_ref()).collect();
        writeln!(self.text, "{}", cells.join(",")).unwrap();
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes artifacts into the output directory and records their digests.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
        Ok(Artifacts { dir: dir.to_owned(), entries: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_owned(), source })?;
        }
        fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let sha256 = Sha256::digest(contents.as_bytes()).iter().fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        });
        self.entries.push(ArtifactEntry { file: name.to_owned(), bytes: contents.len(), sha256 });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("artifact serializes") + "\n";
        self.write(name, &text)
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Everything needed to regenerate the artifacts: the configuration, every
/// chain seed derived from it and the software versions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub config: Experiment,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl Manifest {
    pub fn new(config: &Experiment, seeds: Vec<u64>, artifacts: &Artifacts) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: domino::VERSION.into(),
            config: config.clone(),
            seeds,
            artifacts: artifacts.entries().to_vec(),
        }
    }
}
