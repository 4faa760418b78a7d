//! Artifact bundles, CSV encoding and the digest-keyed result cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub n: i64,
    pub stage: String,
    pub error: String,
}

/// Text files keyed by name, plus the rows that failed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub failures: Vec<FailureEntry>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, content: String) {
        self.files.insert(name.to_string(), content);
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("results serialize");
        s.push('\n');
        self.add(name, s);
    }

    pub fn add_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> std::io::Result<()> {
        self.add(name, csv_string(rows)?);
        Ok(())
    }

    pub fn fail(&mut self, n: i64, stage: &str, error: impl ToString) {
        self.failures.push(FailureEntry {
            n,
            stage: stage.to_string(),
            error: error.to_string(),
        });
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, content) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, content)?;
            written.push(p);
        }
        let manifest = dir.join("failures.json");
        if self.failures.is_empty() {
            if manifest.exists() {
                std::fs::remove_file(&manifest)?;
            }
        } else {
            let mut s = serde_json::to_string_pretty(&self.failures).expect("failures serialize");
            s.push('\n');
            std::fs::write(&manifest, s)?;
            written.push(manifest);
        }
        Ok(written)
    }
}

/// Header from the field names of `T`; `None` becomes an empty cell.
pub fn csv_string<T: Serialize>(rows: &[T]) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Corrupt or unreadable entries count as misses.
    pub fn get(&self, key: &str) -> Option<Artifacts> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, art: &Artifacts) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        std::fs::write(&tmp, serde_json::to_vec(art).expect("artifacts serialize"))?;
        std::fs::rename(tmp, self.path(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: i64,
        x: Option<f64>,
        flag: bool,
    }

    #[test]
    fn csv_layout() {
        let s = csv_string(&[Row { n: -1, x: Some(0.5), flag: true }, Row { n: 2, x: None, flag: false }]).unwrap();
        assert_eq!(s, "n,x,flag\n-1,0.5,true\n2,,false\n");
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("c"));
        assert!(cache.get("k").is_none());
        let mut a = Artifacts::default();
        a.add("x.csv", "n\n1\n".into());
        a.fail(3, "spectrum", "boom");
        cache.put("k", &a).unwrap();
        assert_eq!(cache.get("k"), Some(a));
        std::fs::write(dir.path().join("c/bad.json"), "{").unwrap();
        assert!(cache.get("bad").is_none());
    }

    #[test]
    fn manifest_written_only_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.add("a.txt", "x".into());
        a.fail(1, "s", "e");
        a.write_to(dir.path()).unwrap();
        assert!(dir.path().join("failures.json").exists());
        a.failures.clear();
        a.write_to(dir.path()).unwrap();
        assert!(!dir.path().join("failures.json").exists());
    }
}
