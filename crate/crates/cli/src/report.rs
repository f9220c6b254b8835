use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

pub const TOOL: &str = "lifecat";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header shared by every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// Master seed; `None` for commands without randomness.
    pub seed: Option<u64>,
    /// SHA-256 of the inputs the command read.
    pub config_hash: String,
}

impl Provenance {
    pub fn new(seed: Option<u64>, config_hash: String) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            seed,
            config_hash,
        }
    }
}

/// Hex SHA-256 over the given byte strings, each length-prefixed.
pub fn hash_inputs<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory, created on first use.
#[derive(Debug, Clone)]
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn new(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Self(path))
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    pub fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.0.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok((path, BufWriter::new(f)))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let (path, mut w) = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(&path, e.into()))?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Run a core CSV writer against a new file.
    pub fn write_with<F>(&self, name: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> lifecat::Result<()>,
    {
        let (path, mut w) = self.create(name)?;
        f(&mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_csv<S: Serialize>(
        &self,
        name: &str,
        header: &[&str],
        rows: &[S],
    ) -> Result<PathBuf> {
        self.write_with(name, |w| {
            let mut c = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            let io = |e: csv::Error| lifecat::Error::Io(e.to_string());
            c.write_record(header).map_err(io)?;
            for r in rows {
                c.serialize(r).map_err(io)?;
            }
            c.flush().map_err(|e| lifecat::Error::Io(e.to_string()))
        })
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}
