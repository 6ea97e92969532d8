use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, ChatMessage};

/// Everything that determines a backend response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default)]
    pub controls: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub round: u32,
}

impl ChatRequest {
    /// Hex SHA-256 of the request's canonical JSON (fixed field order,
    /// sorted control keys).
    pub fn key(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureEntry {
    Response(String),
    /// A transport failure seen while recording.
    Miss(String),
}

const MISS_SUFFIX: &str = ".miss";

/// Directory of `<key>` files holding raw response bodies and
/// `<key>.miss` files holding recorded failures.
#[derive(Debug)]
pub struct FixtureStore {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

fn is_key(name: &str) -> bool {
    name.len() == 64 && name.bytes().all(|b| b.is_ascii_hexdigit())
}

impl FixtureStore {
    /// Opens an existing store directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(BackendError::Io(format!("fixture store {} is not a directory", dir.display())));
        }
        Ok(FixtureStore {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    /// Opens the store, creating the directory if needed.
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| BackendError::Io(format!("{}: {e}", dir.display())))?;
        Self::open(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read(&self, name: &str) -> Result<Option<String>, BackendError> {
        match fs::read_to_string(self.dir.join(name)) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(BackendError::Io(format!("reading fixture {name}: {e}"))),
        }
    }

    pub fn get(&self, key: &str) -> Result<Option<FixtureEntry>, BackendError> {
        if let Some(body) = self.read(key)? {
            return Ok(Some(FixtureEntry::Response(body)));
        }
        Ok(self.read(&format!("{key}{MISS_SUFFIX}"))?.map(FixtureEntry::Miss))
    }

    fn write_atomic(&self, name: &str, content: &str) -> Result<(), BackendError> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let io = |e: std::io::Error| BackendError::Io(format!("writing fixture {name}: {e}"));
        let mut file = fs::File::create(&tmp).map_err(io)?;
        file.write_all(content.as_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        fs::rename(&tmp, self.dir.join(name)).map_err(io)
    }

    /// Stores a response body. Re-storing the same body is a no-op; a
    /// different body under an existing key is an integrity error. A
    /// recorded miss for the key is replaced.
    pub fn put_response(&self, key: &str, body: &str) -> Result<(), BackendError> {
        let _guard = self.write_lock.lock().expect("fixture lock poisoned");
        match self.read(key)? {
            Some(existing) if existing == body => return Ok(()),
            Some(_) => return Err(BackendError::Integrity { key: key.to_string() }),
            None => {}
        }
        self.write_atomic(key, body)?;
        let miss = self.dir.join(format!("{key}{MISS_SUFFIX}"));
        if miss.exists() {
            fs::remove_file(&miss).map_err(|e| BackendError::Io(format!("{}: {e}", miss.display())))?;
        }
        Ok(())
    }

    /// Records a failure unless a response is already stored.
    pub fn put_miss(&self, key: &str, message: &str) -> Result<(), BackendError> {
        let _guard = self.write_lock.lock().expect("fixture lock poisoned");
        if self.read(key)?.is_some() {
            return Err(BackendError::Integrity { key: key.to_string() });
        }
        self.write_atomic(&format!("{key}{MISS_SUFFIX}"), message)
    }

    /// All entries, sorted by key.
    pub fn entries(&self) -> Result<BTreeMap<String, FixtureEntry>, BackendError> {
        let mut out = BTreeMap::new();
        let listing = fs::read_dir(&self.dir).map_err(|e| BackendError::Io(format!("{}: {e}", self.dir.display())))?;
        for item in listing {
            let item = item.map_err(|e| BackendError::Io(e.to_string()))?;
            let name = item.file_name().to_string_lossy().into_owned();
            if is_key(&name) {
                if let Some(body) = self.read(&name)? {
                    out.insert(name, FixtureEntry::Response(body));
                }
            } else if let Some(key) = name.strip_suffix(MISS_SUFFIX).filter(|k| is_key(k)) {
                if !out.contains_key(key) {
                    if let Some(msg) = self.read(&name)? {
                        out.insert(key.to_string(), FixtureEntry::Miss(msg));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> Result<usize, BackendError> {
        self.entries().map(|e| e.len())
    }

    pub fn is_empty(&self) -> Result<bool, BackendError> {
        self.len().map(|n| n == 0)
    }

    /// Hex SHA-256 over all entries, for run provenance.
    pub fn digest(&self) -> Result<String, BackendError> {
        let mut hasher = Sha256::new();
        for (key, entry) in self.entries()? {
            let (tag, body) = match &entry {
                FixtureEntry::Response(b) => ("R", b),
                FixtureEntry::Miss(m) => ("M", m),
            };
            hasher.update(key.as_bytes());
            hasher.update(tag.as_bytes());
            hasher.update((body.len() as u64).to_le_bytes());
            hasher.update(body.as_bytes());
        }
        Ok(hex::encode(hasher.finalize()))
    }
}
