//! On-disk cache of pipeline artifacts.
//!
//! Each entry is one JSON file under `<root>/<stage>/<key>.json`, where `key`
//! is the SHA-256 of the manuscript id, stage name and input digest. Writes
//! go through a temporary file and a rename, and concurrent access to one key
//! is serialized by a per-key lock.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ContextError;
use crate::model::text_digest;

#[derive(Serialize, Deserialize)]
struct Entry<T> {
    manuscript_id: String,
    stage: String,
    input_digest: String,
    value: T,
}

#[derive(Debug)]
pub struct ContextCache {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ContextCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ContextError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| ContextError::Cache(format!("{}: {e}", root.display())))?;
        Ok(ContextCache {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn key(manuscript_id: &str, stage: &str, input_digest: &str) -> String {
        text_digest(&format!("{manuscript_id}\u{0}{stage}\u{0}{input_digest}"))
    }

    fn path(&self, stage: &str, key: &str) -> PathBuf {
        self.root.join(stage).join(format!("{key}.json"))
    }

    fn lock(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|p| p.into_inner());
        locks.entry(key.to_string()).or_default().clone()
    }

    fn read<T: DeserializeOwned>(&self, path: &Path) -> Result<Option<T>, ContextError> {
        match fs::read_to_string(path) {
            Ok(text) => {
                let entry: Entry<T> = serde_json::from_str(&text)
                    .map_err(|e| ContextError::Cache(format!("{}: {e}", path.display())))?;
                Ok(Some(entry.value))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ContextError::Cache(format!("{}: {e}", path.display()))),
        }
    }

    fn write<T: Serialize>(&self, path: &Path, entry: &Entry<&T>) -> Result<(), ContextError> {
        let fail = |e: std::io::Error| ContextError::Cache(format!("{}: {e}", path.display()));
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(fail)?;
        }
        let text = serde_json::to_string_pretty(entry)
            .map_err(|e| ContextError::Cache(e.to_string()))?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, text + "\n").map_err(fail)?;
        fs::rename(&tmp, path).map_err(fail)
    }

    pub fn load<T: DeserializeOwned>(
        &self,
        manuscript_id: &str,
        stage: &str,
        input_digest: &str,
    ) -> Result<Option<T>, ContextError> {
        let key = Self::key(manuscript_id, stage, input_digest);
        let lock = self.lock(&key);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        self.read(&self.path(stage, &key))
    }

    pub fn store<T: Serialize>(
        &self,
        manuscript_id: &str,
        stage: &str,
        input_digest: &str,
        value: &T,
    ) -> Result<(), ContextError> {
        let key = Self::key(manuscript_id, stage, input_digest);
        let lock = self.lock(&key);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        self.write(
            &self.path(stage, &key),
            &Entry {
                manuscript_id: manuscript_id.to_string(),
                stage: stage.to_string(),
                input_digest: input_digest.to_string(),
                value,
            },
        )
    }

    /// Returns the cached value for the key, computing and storing it on a
    /// miss. The key stays locked while `compute` runs, so concurrent callers
    /// for one key compute it once.
    pub fn get_or_compute<T, F>(
        &self,
        manuscript_id: &str,
        stage: &str,
        input_digest: &str,
        compute: F,
    ) -> Result<T, ContextError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, ContextError>,
    {
        let key = Self::key(manuscript_id, stage, input_digest);
        let lock = self.lock(&key);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.path(stage, &key);
        if let Some(value) = self.read(&path)? {
            return Ok(value);
        }
        let value = compute()?;
        self.write(
            &path,
            &Entry {
                manuscript_id: manuscript_id.to_string(),
                stage: stage.to_string(),
                input_digest: input_digest.to_string(),
                value: &value,
            },
        )?;
        Ok(value)
    }
}
