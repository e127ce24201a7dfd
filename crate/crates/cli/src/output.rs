//! Output directory with a hash manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `name` (a relative path, `/`-separated) and records its hash.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            bytes: contents.len(),
            sha256: hex::encode(Sha256::digest(contents)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest, sorted by path, and returns the entries.
    pub fn finish(mut self) -> Result<Vec<ManifestEntry>> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut text = serde_json::to_string_pretty(&serde_json::json!({ "files": &self.entries }))?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path()).unwrap();
        out.write("b/x.txt", b"abc").unwrap();
        out.write("a.txt", b"").unwrap();
        let entries = out.finish().unwrap();
        assert_eq!(entries[0].path, "a.txt");
        assert_eq!(entries[1].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(dir.path().join(MANIFEST).exists());
    }
}
