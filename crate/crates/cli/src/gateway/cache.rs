//! Content-addressed response cache on disk.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

/// One file per key under `dir/<first two hex chars>/<key>`. Writes go to a
/// temporary file and are renamed into place, serialised by a mutex.
#[derive(Debug)]
pub struct DiskCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
    counter: AtomicU64,
}

impl DiskCache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(DiskCache {
            dir: dir.to_path_buf(),
            write_lock: Mutex::new(()),
            counter: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        let shard = key.get(..2).unwrap_or("__");
        self.dir.join(shard).join(key)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, value: &str) -> std::io::Result<()> {
        let _guard = self.write_lock.lock().unwrap();
        let path = self.path(key);
        let parent = path.parent().expect("sharded path has a parent");
        std::fs::create_dir_all(parent)?;
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let tmp = parent.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(value.as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &path)
    }
}

/// Cache key for one embedding of `text` by `model`.
pub fn embedding_key(model: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"embed\0");
    h.update(model.as_bytes());
    h.update(b"\0");
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// Cache key for a completion: fingerprint scoped by model.
pub fn completion_key(model: &str, fingerprint: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"complete\0");
    h.update(model.as_bytes());
    h.update(b"\0");
    h.update(fingerprint.as_bytes());
    hex::encode(h.finalize())
}
