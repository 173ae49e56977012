use std::path::Path;

use anyhow::{Context, Result};

use super::require_chains;
use crate::config::PipelineConfig;

/// Merges the configured chain fixtures and writes them back out as one
/// fixture with inline contract sources.
pub fn run(cfg: &PipelineConfig, dest: &Path) -> Result<String> {
    let store = require_chains(cfg, "snapshot")?;
    store
        .save_fixture(dest)
        .with_context(|| format!("writing fixture {}", dest.display()))?;
    let chains: Vec<String> = store.chains().iter().map(|c| c.to_string()).collect();
    Ok(format!(
        "snapshot: {} transactions on {} written to {}",
        store.len(),
        chains.join(", "),
        dest.display()
    ))
}
