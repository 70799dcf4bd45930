use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rog_core::data::{load_feature_set, Format, FeatureSet};
use rog_core::{Result, RogError};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn io_err(path: &Path, e: std::io::Error) -> RogError {
    RogError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Defaults from `--config` when given, otherwise `T::default()`.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| RogError::Config(format!("{}: {e}", path.display())))
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(&p, contents).map_err(|e| io_err(&p, e))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Records the resolved configuration plus a sidecar log holding the
    /// only non-reproducible detail, the wall-clock time.
    pub fn record<T: Serialize>(&self, command: &str, config: &T) -> Result<()> {
        self.write_json("config.json", config)?;
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.write("run.log", format!("command={command}\nunix_time={secs}\n"))?;
        Ok(())
    }
}

pub fn load_any(path: &Path) -> Result<FeatureSet> {
    load_feature_set(path, Format::from_path(path))
}

/// File stems as layer names, de-duplicated with an index suffix.
pub fn layer_ids(paths: &[PathBuf]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::with_capacity(paths.len());
    for (k, p) in paths.iter().enumerate() {
        let stem = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("layer{k}"));
        if ids.contains(&stem) {
            ids.push(format!("{stem}_{k}"));
        } else {
            ids.push(stem);
        }
    }
    ids
}

pub fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| RogError::Config(format!("bad {what} entry `{s}`")))
        })
        .collect()
}
