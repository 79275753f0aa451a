use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::json::FORMAT_VERSION;

/// Bumped whenever the beam computation or its output changes.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+beams1");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    /// Canonical angle text, so that equal angles written differently share entries.
    pub alpha: String,
    pub precision: u32,
    pub band: [i64; 2],
    pub version: String,
}

impl CacheKey {
    pub fn new(alpha: &str, precision: u32, band: (i64, i64)) -> Self {
        CacheKey {
            alpha: alpha.to_string(),
            precision,
            band: [band.0, band.1],
            version: format!("{CODE_VERSION}/{FORMAT_VERSION}"),
        }
    }

    pub fn digest(&self) -> String {
        let text = format!(
            "{}|{}|{}..{}|{}",
            self.alpha, self.precision, self.band[0], self.band[1], self.version
        );
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: CacheKey,
    checksum: String,
    payload: String,
}

fn checksum(payload: &str) -> String {
    hex::encode(Sha256::digest(payload.as_bytes()))
}

/// Directory of beam tables keyed by angle, precision, band and code version.
#[derive(Clone, Debug)]
pub struct BeamCache {
    dir: PathBuf,
}

impl BeamCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(BeamCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.digest()))
    }

    /// The stored payload, or `None` on a miss. Entries whose key or checksum
    /// do not match are treated as misses.
    pub fn get(&self, key: &CacheKey) -> Result<Option<String>> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let Ok(entry) = serde_json::from_str::<Entry>(&text) else {
            return Ok(None);
        };
        if entry.key != *key || entry.checksum != checksum(&entry.payload) {
            return Ok(None);
        }
        Ok(Some(entry.payload))
    }

    /// Store `payload`, replacing any previous entry atomically.
    pub fn put(&self, key: &CacheKey, payload: &str) -> Result<()> {
        let entry = Entry {
            key: key.clone(),
            checksum: checksum(payload),
            payload: payload.to_string(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(serde_json::to_string(&entry)?.as_bytes())?;
        tmp.flush()?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }
}
