//! Report files. Every JSON document carries `schema_version`, and every
//! command directory gets a `manifest.json` listing what was written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::Format;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize + ?Sized> {
    schema_version: u32,
    report: &'a str,
    data: &'a T,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    files: &'a BTreeMap<String, String>,
}

/// Writer for one command's output directory.
pub struct ReportDir {
    dir: PathBuf,
    command: String,
    format: Format,
    /// Relative path to report kind.
    files: BTreeMap<String, String>,
}

impl ReportDir {
    pub fn create(root: &Path, command: &str, format: Format) -> Result<Self> {
        let dir = root.join(command);
        if dir.exists() {
            fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(ReportDir {
            dir,
            command: command.to_string(),
            format,
            files: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn write_raw(&mut self, rel: &str, kind: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.insert(rel.to_string(), kind.to_string());
        Ok(path)
    }

    /// A JSON document, regardless of the table format.
    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, data: &T) -> Result<PathBuf> {
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            report: name,
            data,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        self.write_raw(&format!("{name}.json"), name, text.as_bytes())
    }

    /// A flat table, written as CSV or as a JSON array depending on format.
    pub fn table<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        match self.format {
            Format::Json => self.json(name, rows),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in rows {
                    w.serialize(row)?;
                }
                let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
                self.write_raw(&format!("{name}.csv"), name, &bytes)
            }
        }
    }

    /// Pre-rendered text such as DOT graphs, Solidity probes or CSV.
    pub fn text(&mut self, rel: &str, kind: &str, text: &str) -> Result<PathBuf> {
        self.write_raw(rel, kind, text.as_bytes())
    }

    /// One address (or other item) per line.
    pub fn lines<I, S>(&mut self, rel: &str, kind: &str, items: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = S>,
        S: std::fmt::Display,
    {
        let mut text = String::new();
        for item in items {
            text.push_str(&item.to_string());
            text.push('\n');
        }
        self.write_raw(rel, kind, text.as_bytes())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: &self.command,
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: &'static str,
    }

    #[test]
    fn tables_follow_format_and_manifest_lists_files() {
        let root = tempfile::tempdir().unwrap();
        let mut dir = ReportDir::create(root.path(), "x", Format::Csv).unwrap();
        dir.table("rows", &[Row { a: 1, b: "q" }]).unwrap();
        dir.json("meta", &[1, 2]).unwrap();
        let out = dir.finish().unwrap();
        assert_eq!(fs::read_to_string(out.join("rows.csv")).unwrap(), "a,b\n1,q\n");
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
        assert_eq!(meta["schema_version"], 1);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(manifest["files"]["rows.csv"], "rows");
        assert_eq!(manifest["files"]["meta.json"], "meta");
    }

    #[test]
    fn empty_csv_table_is_empty_file() {
        let root = tempfile::tempdir().unwrap();
        let mut dir = ReportDir::create(root.path(), "x", Format::Csv).unwrap();
        dir.table::<Row>("rows", &[]).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("rows.csv")).unwrap(), "");
    }
}
