//! Run manifests: config echo, seed, version, timing and output list.

use std::path::{Path, PathBuf};

use lref_core::config::{parse_list, KvConfig};
use lref_core::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub kind: String,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time_s: f64,
    /// `ok` or `failed`.
    pub status: String,
    pub error: Option<String>,
    /// Output files relative to the manifest directory.
    pub outputs: Vec<String>,
    /// Effective configuration.
    pub config: KvConfig,
    /// Directory holding the manifest.
    pub dir: PathBuf,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut kv = KvConfig::default();
        kv.set("run", "kind", self.kind.clone());
        kv.set("run", "seed", self.seed.to_string());
        kv.set("run", "tool_version", self.tool_version.clone());
        kv.set("run", "wall_time_s", format!("{:.3}", self.wall_time_s));
        kv.set("run", "status", self.status.clone());
        if let Some(e) = &self.error {
            kv.set("run", "error", e.replace(['#', ';', '\n'], " "));
        }
        kv.set("outputs", "files", self.outputs.join(", "));
        for (name, sec) in self.config.sections() {
            let target = if name.is_empty() { "config".to_string() } else { format!("config.{name}") };
            for (k, v) in sec {
                kv.set(&target, k, v.clone());
            }
        }
        kv.to_text()
    }

    pub fn write(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)?;
        let p = self.dir.join(MANIFEST_FILE);
        std::fs::write(&p, self.to_text())?;
        Ok(p)
    }

    /// Reads a manifest file, or `manifest.txt` inside a directory.
    pub fn load(path: &Path) -> Result<Self> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        if !file.exists() {
            return Err(Error::Validation(format!("manifest `{}` does not exist", file.display())));
        }
        let kv = KvConfig::load(&file)?;
        let req = |k: &str| {
            kv.get("run", k)
                .map(str::to_string)
                .ok_or_else(|| Error::Validation(format!("manifest `{}` lacks run.{k}", file.display())))
        };
        let mut config = KvConfig::default();
        for (name, sec) in kv.sections() {
            let target = match name.strip_prefix("config") {
                Some("") => "",
                Some(rest) => match rest.strip_prefix('.') {
                    Some(r) => r,
                    None => continue,
                },
                None => continue,
            };
            for (k, v) in sec {
                config.set(target, k, v.clone());
            }
        }
        Ok(Self {
            kind: req("kind")?,
            seed: req("seed")?.parse().map_err(|_| Error::Validation("manifest seed is not an integer".into()))?,
            tool_version: req("tool_version")?,
            wall_time_s: req("wall_time_s")?.parse().unwrap_or(0.0),
            status: req("status")?,
            error: kv.get("run", "error").map(str::to_string),
            outputs: kv.get("outputs", "files").map(parse_list::<String>).transpose()?.unwrap_or_default(),
            config,
            dir: file.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }
}
