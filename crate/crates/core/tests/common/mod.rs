#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn contract_fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join("contracts").join(name))
        .unwrap_or_else(|e| panic!("read fixture {name}: {e}"))
}
