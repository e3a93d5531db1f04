//! On-disk cache of acquired texts.
//!
//! One JSON file per key, named by the hex digest of the key material, plus
//! an append-only `index.jsonl` mapping keys back to what they describe.
//! Writes go through a temp file and a rename, so concurrent writers of
//! distinct keys never expose partial files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use super::types::{AcquiredText, SourceKind, SourceParams};
use super::AcquisitionError;
use crate::taxonomy::TaskId;
use crate::util::sha256_hex;

pub const INDEX_FILE: &str = "index.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(String);

#[derive(Serialize)]
struct KeyMaterial<'a> {
    task: TaskId,
    entity_id: &'a str,
    source: SourceKind,
    params: &'a SourceParams,
}

impl CacheKey {
    pub fn new(task: TaskId, entity_id: &str, source: SourceKind, params: &SourceParams) -> Self {
        let material = serde_json::to_vec(&KeyMaterial {
            task,
            entity_id,
            source,
            params,
        })
        .expect("key material serializes");
        CacheKey(sha256_hex(&material))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub key: CacheKey,
    pub task: TaskId,
    pub entity_id: String,
    pub source: SourceKind,
    pub params: SourceParams,
}

#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    index_lock: Mutex<()>,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, AcquisitionError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            index_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, key: &CacheKey) -> Result<Option<AcquiredText>, AcquisitionError> {
        let path = self.path_for(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| AcquisitionError::CacheCorrupt {
                path,
                message: e.to_string(),
            })
    }

    pub fn store(
        &self,
        task: TaskId,
        key: &CacheKey,
        text: &AcquiredText,
    ) -> Result<(), AcquisitionError> {
        let bytes = serde_json::to_vec_pretty(text).expect("acquired text serializes");
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(key)).map_err(|e| e.error)?;

        let entry = IndexEntry {
            key: key.clone(),
            task,
            entity_id: text.entity_id.clone(),
            source: text.source,
            params: text.params.clone(),
        };
        let mut line = serde_json::to_string(&entry).expect("index entry serializes");
        line.push('\n');
        let _guard = self.index_lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut index = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(INDEX_FILE))?;
        index.write_all(line.as_bytes())?;
        Ok(())
    }

    /// Index entries keyed by cache key; later lines win.
    pub fn index(&self) -> Result<BTreeMap<CacheKey, IndexEntry>, AcquisitionError> {
        let path = self.dir.join(INDEX_FILE);
        let file = match std::fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(BTreeMap::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = BTreeMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: IndexEntry =
                serde_json::from_str(&line).map_err(|e| AcquisitionError::CacheCorrupt {
                    path: path.clone(),
                    message: format!("line {}: {e}", n + 1),
                })?;
            out.insert(entry.key.clone(), entry);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::types::{Provenance, SearchResult};
    use chrono::{TimeZone, Utc};

    fn sample(k: usize) -> AcquiredText {
        AcquiredText {
            entity_id: "e1".into(),
            source: SourceKind::Gsnip,
            params: SourceParams::Snippets { k },
            text: "Gold Hills Mining Ltd is a junior explorer.\nSecond line \u{2014} ok".into(),
            retrieved_at: Utc.with_ymd_and_hms(2025, 3, 4, 5, 6, 7).unwrap(),
            provenance: Provenance::SearchResults(vec![SearchResult {
                rank: 1,
                title: "t".into(),
                url: "https://x".into(),
                snippet: "Gold Hills Mining Ltd is a junior explorer.".into(),
            }]),
            refusal: false,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let text = sample(10);
        let key = CacheKey::new(TaskId::Sic, "e1", text.source, &text.params);
        assert!(cache.load(&key).unwrap().is_none());
        cache.store(TaskId::Sic, &key, &text).unwrap();
        assert_eq!(cache.load(&key).unwrap().unwrap(), text);
        let index = cache.index().unwrap();
        assert_eq!(index[&key].entity_id, "e1");
    }

    #[test]
    fn params_are_part_of_key() {
        let a = CacheKey::new(TaskId::Sic, "e1", SourceKind::Gsnip, &SourceParams::Snippets { k: 5 });
        let b = CacheKey::new(TaskId::Sic, "e1", SourceKind::Gsnip, &SourceParams::Snippets { k: 10 });
        let c = CacheKey::new(TaskId::Healthcare, "e1", SourceKind::Gsnip, &SourceParams::Snippets { k: 10 });
        assert_ne!(a, b);
        assert_ne!(b, c);
        assert_eq!(a.as_str().len(), 64);
    }

    #[test]
    fn corrupt_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let key = CacheKey::new(TaskId::Sic, "e1", SourceKind::Gsnip, &SourceParams::Snippets { k: 10 });
        std::fs::write(cache.path_for(&key), b"{ not json").unwrap();
        match cache.load(&key) {
            Err(AcquisitionError::CacheCorrupt { path, .. }) => assert_eq!(path, cache.path_for(&key)),
            other => panic!("expected CacheCorrupt, got {other:?}"),
        }
    }
}
