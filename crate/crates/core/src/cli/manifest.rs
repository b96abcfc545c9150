//! The `run.json` record written next to every run's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    /// Subcommand path, e.g. `fit poisson`.
    pub subcommand: String,
    /// Parsed flags (output directory and thread count excluded).
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    /// Input path as given on the command line → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file relative to the output directory → SHA-256.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(subcommand: &str, flags: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            program: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            flags,
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Hashes every file under `out` except the manifest itself.
    pub fn collect_outputs(&mut self, out: &Path) -> Result<()> {
        let mut files = Vec::new();
        walk(out, &mut files)?;
        for f in files {
            let rel = f.strip_prefix(out).unwrap_or(&f);
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            if key == MANIFEST {
                continue;
            }
            self.outputs.insert(key, sha256_file(&f)?);
        }
        Ok(())
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(out.join(MANIFEST), s)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

fn walk(dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, files)?;
        } else {
            files.push(p);
        }
    }
    Ok(())
}

/// A checksum that no longer matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub path: String,
    pub expected: String,
    /// `None` when the file could not be read.
    pub found: Option<String>,
}

/// Re-hashes the recorded inputs (paths resolved against `base`) and the
/// outputs next to the manifest; returns every mismatch.
pub fn verify(manifest_path: &Path, base: &Path) -> Result<Vec<Mismatch>> {
    let m = Manifest::read(manifest_path)?;
    let out_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    let mut check = |key: &String, expected: &String, path: PathBuf| {
        let found = sha256_file(&path).ok();
        if found.as_ref() != Some(expected) {
            bad.push(Mismatch { path: key.clone(), expected: expected.clone(), found });
        }
    };
    for (k, v) in &m.inputs {
        let p = Path::new(k);
        check(k, v, if p.is_absolute() { p.to_path_buf() } else { base.join(p) });
    }
    for (k, v) in &m.outputs {
        check(k, v, out_dir.join(k));
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_modified_input() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        let out = dir.path().join("out");
        fs::create_dir_all(out.join("sub")).unwrap();
        fs::write(&input, "x,y,t\n").unwrap();
        fs::write(out.join("a.csv"), "1\n").unwrap();
        fs::write(out.join("sub/b.csv"), "2\n").unwrap();
        let mut m = Manifest::new("summary", serde_json::json!({}), None);
        m.add_input(&input).unwrap();
        m.collect_outputs(&out).unwrap();
        m.write(&out).unwrap();
        assert_eq!(m.outputs.keys().collect::<Vec<_>>(), ["a.csv", "sub/b.csv"]);
        let path = out.join(MANIFEST);
        assert!(verify(&path, Path::new("/")).unwrap().is_empty());
        fs::write(&input, "x,y,t\n0,0,0\n").unwrap();
        let bad = verify(&path, Path::new("/")).unwrap();
        assert_eq!(bad.len(), 1);
        assert!(bad[0].found.is_some());
    }
}
