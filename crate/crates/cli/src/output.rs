//! Report files and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Output directory that remembers every file written to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub created_unix: u64,
    pub files: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn target(&mut self, rel: &str) -> anyhow::Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        self.files.push(rel.replace('\\', "/"));
        Ok(path)
    }

    /// Header row plus one row per record, RFC 4180 quoting.
    pub fn write_csv<T: Serialize>(&mut self, rel: &str, rows: &[T]) -> anyhow::Result<PathBuf> {
        let path = self.target(rel)?;
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> anyhow::Result<PathBuf> {
        let path = self.target(rel)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Write the manifest listing every file written so far.
    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig) -> anyhow::Result<Vec<String>> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            files: self.files.clone(),
        };
        let text = toml::to_string(&manifest)?;
        self.write_text(MANIFEST_FILE, &text)?;
        Ok(self.files)
    }
}

/// Keep file names portable.
pub fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    #[derive(Serialize)]
    struct Row {
        name: String,
        value: f64,
    }

    #[test]
    fn csv_quotes_and_manifest_lists_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let rows = vec![Row { name: "a,b".into(), value: 0.5 }];
        let p = out.write_csv("sub/x.csv", &rows).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "name,value\n\"a,b\",0.5\n");
        let cfg = ExperimentConfig::from_overrides(Overrides::default()).unwrap();
        let files = out.finish("test", &cfg).unwrap();
        assert_eq!(files, vec!["sub/x.csv", MANIFEST_FILE]);
        let m = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(m.contains(&config_hash(&cfg)));
        assert!(m.contains("files = [\"sub/x.csv\"]"));
    }

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::from_overrides(Overrides::default()).unwrap();
        let b = ExperimentConfig::from_overrides(Overrides { seed: Some(1), ..Default::default() }).unwrap();
        assert_eq!(config_hash(&a).len(), 64);
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(file_stem("a/b c"), "a_b_c");
    }
}
