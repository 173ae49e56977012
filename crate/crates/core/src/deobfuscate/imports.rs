use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha3::{Digest, Keccak256};
use thiserror::Error;

/// Name of the URL → filename index inside an import store directory.
pub const INDEX_FILE: &str = "index.tsv";

#[derive(Debug, Error)]
pub enum ImportStoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: expected `URL<TAB>filename`")]
    BadIndexLine { path: PathBuf, line: usize },
    #[error("{path}:{line}: duplicate URL `{url}`")]
    DuplicateUrl { path: PathBuf, line: usize, url: String },
    #[error("{path}:{line}: filename `{name}` must be a plain file name")]
    BadFileName { path: PathBuf, line: usize, name: String },
}

/// Offline snapshot of imported source files keyed by the import path as
/// written in the importing contract.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportStore {
    entries: BTreeMap<String, String>,
}

impl ImportStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, url: impl Into<String>, source: impl Into<String>) {
        self.entries.insert(url.into(), source.into());
    }

    /// `None` when the URL was never captured; `Some("")` for an empty file.
    pub fn get(&self, url: &str) -> Option<&str> {
        self.entries.get(url).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn urls(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Loads `dir/index.tsv` and every file it names. A missing directory
    /// yields an empty store.
    pub fn load(dir: &Path) -> Result<Self, ImportStoreError> {
        let index_path = dir.join(INDEX_FILE);
        let index = match fs::read_to_string(&index_path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(source) => return Err(ImportStoreError::Io { path: index_path, source }),
        };
        let mut store = Self::new();
        for (i, line) in index.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((url, name)) = line.split_once('\t') else {
                return Err(ImportStoreError::BadIndexLine { path: index_path, line: line_no });
            };
            let (url, name) = (url.trim(), name.trim());
            if url.is_empty() || name.is_empty() {
                return Err(ImportStoreError::BadIndexLine { path: index_path, line: line_no });
            }
            if name.contains(['/', '\\']) || name == ".." || name == "." {
                return Err(ImportStoreError::BadFileName {
                    path: index_path,
                    line: line_no,
                    name: name.to_string(),
                });
            }
            if store.entries.contains_key(url) {
                return Err(ImportStoreError::DuplicateUrl {
                    path: index_path,
                    line: line_no,
                    url: url.to_string(),
                });
            }
            let file = dir.join(name);
            let source = fs::read_to_string(&file)
                .map_err(|source| ImportStoreError::Io { path: file, source })?;
            store.insert(url, source);
        }
        Ok(store)
    }

    /// Writes `source` into the store directory under a name derived from the
    /// URL and records it in the index, replacing an earlier entry for the
    /// same URL. Returns the file name used.
    pub fn save_entry(dir: &Path, url: &str, source: &str) -> Result<String, ImportStoreError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ImportStoreError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let name = snapshot_file_name(url);
        let file = dir.join(&name);
        fs::write(&file, source).map_err(io_err(&file))?;

        let index_path = dir.join(INDEX_FILE);
        let existing = match fs::read_to_string(&index_path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io_err(&index_path)(e)),
        };
        let mut lines: Vec<String> = existing
            .lines()
            .filter(|l| l.split_once('\t').map(|(u, _)| u.trim()) != Some(url))
            .map(str::to_string)
            .collect();
        lines.push(format!("{url}\t{name}"));
        let mut text = lines.join("\n");
        text.push('\n');
        fs::write(&index_path, text).map_err(io_err(&index_path))?;
        Ok(name)
    }
}

/// Stable file name for a URL: a short hash plus the URL's last path segment.
fn snapshot_file_name(url: &str) -> String {
    let digest = Keccak256::digest(url.as_bytes());
    let hash: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    let last = url.rsplit('/').next().unwrap_or("");
    let stem: String = last
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
        .take(48)
        .collect();
    if stem.is_empty() || stem.chars().all(|c| c == '.') {
        format!("{hash}.sol")
    } else {
        format!("{hash}-{stem}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_and_empty_are_distinct() {
        let mut store = ImportStore::new();
        store.insert("https://x/empty.sol", "");
        assert_eq!(store.get("https://x/empty.sol"), Some(""));
        assert_eq!(store.get("https://x/other.sol"), None);
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let url = "https://raw.githubusercontent.com/a/b/main/lib.sol";
        ImportStore::save_entry(dir.path(), url, "contract M {}").unwrap();
        ImportStore::save_entry(dir.path(), "https://e/empty.sol", "").unwrap();
        ImportStore::save_entry(dir.path(), url, "contract N {}").unwrap();
        let store = ImportStore::load(dir.path()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.get(url), Some("contract N {}"));
        assert_eq!(store.get("https://e/empty.sol"), Some(""));
    }

    #[test]
    fn rejects_path_traversal() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(INDEX_FILE), "u\t../etc/passwd\n").unwrap();
        assert!(matches!(
            ImportStore::load(dir.path()),
            Err(ImportStoreError::BadFileName { .. })
        ));
    }
}
