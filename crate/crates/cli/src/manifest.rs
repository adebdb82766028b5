use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Output directory that remembers a checksum for every file it writes.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<OutputFile>,
    created: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub stage: String,
    pub sha256: String,
    pub bytes: usize,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Outputs { dir, written: Vec::new(), created: false }
    }

    fn ensure_dir(&mut self, sub: &Path) -> std::io::Result<()> {
        if !self.created {
            fs::create_dir_all(&self.dir)?;
            self.created = true;
        }
        if let Some(parent) = sub.parent() {
            fs::create_dir_all(self.dir.join(parent))?;
        }
        Ok(())
    }

    pub fn write_bytes(&mut self, stage: &str, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
        self.ensure_dir(Path::new(rel))?;
        fs::write(self.dir.join(rel), bytes)?;
        self.written.retain(|f| f.path != rel);
        self.written.push(OutputFile {
            path: rel.to_string(),
            stage: stage.to_string(),
            sha256: hex(&Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, stage: &str, rel: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write_bytes(stage, rel, text.as_bytes())
    }

    /// Renders into memory with `f`, then writes the result.
    pub fn write_with<F>(&mut self, stage: &str, rel: &str, f: F) -> std::io::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> hylosolve_core::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf).map_err(std::io::Error::other)?;
        self.write_bytes(stage, rel, &buf)
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.written
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub gate_passed: bool,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    /// Parsed configuration, or `null` when it failed validation.
    pub config: Option<serde_json::Value>,
    pub started: String,
    pub finished: String,
    pub status: &'static str,
    pub exit_code: i32,
    pub failure_stage: Option<String>,
    pub failure_message: Option<String>,
    pub outputs: Vec<OutputFile>,
    pub certificate: Option<CertificateSummary>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksums_match_known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(dir.path().join("run"));
        out.write_bytes("test", "a/b.txt", b"abc").unwrap();
        let f = &out.files()[0];
        assert_eq!(f.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(fs::read(dir.path().join("run/a/b.txt")).unwrap(), b"abc");
    }
}
