//! Content-addressed result cache.
//!
//! Results are keyed by a hash of the canonical request JSON plus the crate
//! version, so stale entries can never be replayed across code changes.
//! Writes go through a temporary file and an atomic rename; concurrent
//! writers race benignly to identical content.

use crate::error::Result;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub fn cache_key(request: &serde_json::Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
    hasher.update(b"\0");
    hasher.update(request.to_string().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn entry_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

pub fn lookup(dir: &Path, key: &str) -> Option<serde_json::Value> {
    let text = std::fs::read_to_string(entry_path(dir, key)).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn store(dir: &Path, key: &str, value: &serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{key}.tmp.{}", std::process::id()));
    std::fs::write(&tmp, serde_json::to_string_pretty(value)?)?;
    std::fs::rename(&tmp, entry_path(dir, key))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_key_stability() {
        let dir = tempfile::tempdir().unwrap();
        let req = serde_json::json!({"cmd": "x", "value": 1.25});
        let key = cache_key(&req);
        assert_eq!(key, cache_key(&req));
        assert!(lookup(dir.path(), &key).is_none());
        let val = serde_json::json!({"answer": 42});
        store(dir.path(), &key, &val).unwrap();
        assert_eq!(lookup(dir.path(), &key), Some(val));
    }

    #[test]
    fn different_requests_different_keys() {
        let a = cache_key(&serde_json::json!({"z": 1}));
        let b = cache_key(&serde_json::json!({"z": 2}));
        assert_ne!(a, b);
    }
}
