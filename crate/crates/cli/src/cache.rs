//! Content-addressed store for computed band sets.

use std::fs;
use std::path::{Path, PathBuf};

use dynspec::BandSet64;
use log::{info, warn};
use sha2::{Digest, Sha256};

/// Bumped whenever numerical output may change.
pub const CODE_TAG: &str = concat!("dynspec-", env!("CARGO_PKG_VERSION"), "-bands-1");

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
    /// Entry existed but did not parse; it was recomputed and overwritten.
    Repaired,
}

pub fn key(section: &str) -> String {
    let mut h = Sha256::new();
    h.update(CODE_TAG.as_bytes());
    h.update(b"\n");
    h.update(section.as_bytes());
    hex::encode(h.finalize())
}

impl Cache {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Cached value for `key`, or `compute` stored under it.
    pub fn get_or_compute<E>(
        &self,
        key: &str,
        compute: impl FnOnce() -> Result<BandSet64, E>,
    ) -> Result<(BandSet64, Lookup), E> {
        let path = self.path(key);
        let mut status = Lookup::Miss;
        if let Ok(text) = fs::read_to_string(&path) {
            match BandSet64::from_json(&text) {
                Ok(b) => {
                    info!("cache hit {}", &key[..12]);
                    return Ok((b, Lookup::Hit));
                }
                Err(e) => {
                    warn!("corrupt cache entry {}: {e}; recomputing", path.display());
                    status = Lookup::Repaired;
                }
            }
        }
        if status == Lookup::Miss {
            info!("cache miss {}", &key[..12]);
        }
        let value = compute()?;
        match value.to_json() {
            Ok(json) => {
                // write then rename so readers never see a partial file
                let tmp = path.with_extension("tmp");
                if let Err(e) = fs::write(&tmp, json).and_then(|_| fs::rename(&tmp, &path)) {
                    warn!("could not write cache entry {}: {e}", path.display());
                }
            }
            Err(e) => warn!("could not serialize cache entry: {e}"),
        }
        Ok((value, status))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dynspec::spectrum::Provenance;

    fn bands() -> BandSet64 {
        BandSet64::new(vec![(-1.0, 1.0)], 1e-3, Provenance::new("test")).unwrap()
    }

    #[test]
    fn hit_after_miss_and_repair_after_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let k = key("lambda=1\n");
        let (a, s) = cache.get_or_compute::<()>(&k, || Ok(bands())).unwrap();
        assert_eq!(s, Lookup::Miss);
        let (b, s) = cache.get_or_compute::<()>(&k, || panic!("should hit")).unwrap();
        assert_eq!((s, &b), (Lookup::Hit, &a));
        fs::write(cache.path(&k), "{not json").unwrap();
        let (_, s) = cache.get_or_compute::<()>(&k, || Ok(bands())).unwrap();
        assert_eq!(s, Lookup::Repaired);
        assert_ne!(key("lambda=1\n"), key("lambda=2\n"));
    }
}
