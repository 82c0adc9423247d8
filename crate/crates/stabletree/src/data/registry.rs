//! Dataset registry: `registry.toml` in the data directory maps each dataset
//! name to its CSV file, response column, encoding and expected shape.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stabletree_core::Dataset;

use super::preprocess::{preprocess, Encoding, Preprocessing};
use super::table::{load_csv, SchemaHints};
use crate::error::{Error, Result};

pub const DATA_DIR_ENV: &str = "STABLETREE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub name: String,
    pub file: String,
    pub target: String,
    #[serde(default)]
    pub encoding: Encoding,
    #[serde(default)]
    pub keep_all_levels: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    pub rows: usize,
    pub features: usize,
    #[serde(default)]
    pub source: Option<String>,
}

impl Entry {
    pub fn preprocessing(&self) -> Preprocessing {
        Preprocessing {
            encoding: self.encoding,
            keep_all_levels: self.keep_all_levels.clone(),
            drop: self.drop.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct File {
    dataset: Vec<Entry>,
}

#[derive(Debug, Clone)]
pub struct Registry {
    root: PathBuf,
    entries: Vec<Entry>,
}

impl Registry {
    /// `$STABLETREE_DATA_DIR`, else `./data` when it holds a registry, else
    /// the `data/` directory of this source tree.
    pub fn default_root() -> PathBuf {
        if let Some(d) = std::env::var_os(DATA_DIR_ENV) {
            return PathBuf::from(d);
        }
        let local = PathBuf::from("data");
        if local.join("registry.toml").is_file() {
            return local;
        }
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
    }

    pub fn open_default() -> Result<Self> {
        Self::open(&Self::default_root())
    }

    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join("registry.toml");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let file: File = toml::from_str(&text)
            .map_err(|e| Error::Registry(format!("{}: {e}", path.display())))?;
        let mut names = std::collections::HashSet::new();
        for e in &file.dataset {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Registry(format!("dataset '{}' registered twice", e.name)));
            }
        }
        Ok(Self {
            root: root.to_path_buf(),
            entries: file.dataset,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn entry(&self, name: &str) -> Result<&Entry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownDataset {
                name: name.to_string(),
                available: self.names(),
            })
    }

    pub fn path(&self, entry: &Entry) -> PathBuf {
        self.root.join(&entry.file)
    }

    /// Loads and preprocesses a dataset, failing if its shape differs from
    /// the registered one.
    pub fn load(&self, name: &str) -> Result<Dataset> {
        let e = self.entry(name)?;
        let hints = SchemaHints {
            categorical: e.categorical.clone(),
        };
        let raw = load_csv(&self.path(e), Some(&e.target), &hints)?;
        let d = preprocess(&raw, &e.target, &e.preprocessing())?;
        if (d.n_rows(), d.n_features()) != (e.rows, e.features) {
            return Err(Error::Registry(format!(
                "{}: preprocessed to {} x {}, registry expects {} x {}",
                e.name,
                d.n_rows(),
                d.n_features(),
                e.rows,
                e.features
            )));
        }
        Ok(d)
    }
}
