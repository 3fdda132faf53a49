//! Atomic artifact writes and the provenance stamped into every output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunProvenance {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl RunProvenance {
    /// `# key=value` lines that open every CSV artifact.
    pub fn csv_header(&self) -> String {
        format!(
            "# tool_version={}\n# config_sha256={}\n# seed={}\n",
            self.tool_version, self.config_sha256, self.seed
        )
    }
}

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so readers never observe a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Fails early when an input is missing or an output directory is absent.
pub fn check_paths(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    for p in inputs {
        if !p.is_file() {
            return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
        }
    }
    for p in outputs {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                return Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "output directory not found")));
            }
        }
    }
    Ok(())
}
