//! One module per subcommand plus the inputs they share.

pub mod cluster;
pub mod expand;
pub mod extract;
pub mod snapshot;
pub mod triage;
pub mod victims;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use scamlens_core::chain::{load_fixture, ChainQuery, ChainStore};
use scamlens_core::cluster::ProfileBuilder;
use scamlens_core::deobfuscate::{harvest_sink_signatures, ImportStore, SignatureCatalog};
use scamlens_core::solidity::{parse_source, SourceUnit, SyntaxError};
use scamlens_core::Address;

use crate::config::PipelineConfig;
use crate::ConfigError;

pub(crate) fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, ConfigError> {
    path.as_deref()
        .ok_or_else(|| ConfigError(format!("{what} is required (flag or [paths] entry)")))
}

/// One address per line; blank lines and `#` comments are ignored.
pub fn read_addresses(path: &Path) -> Result<BTreeSet<Address>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let addr: Address = line
            .parse()
            .with_context(|| format!("{}:{}: not an address", path.display(), i + 1))?;
        out.insert(addr);
    }
    Ok(out)
}

/// Loads every fixture and merges them into one store.
pub fn load_chains(paths: &[PathBuf]) -> Result<ChainStore> {
    let stores = paths
        .par_iter()
        .map(|p| load_fixture(p).with_context(|| format!("loading chain fixture {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    merge_stores(stores)
}

pub fn merge_stores(stores: Vec<ChainStore>) -> Result<ChainStore> {
    if stores.len() == 1 {
        return Ok(stores.into_iter().next().expect("one store"));
    }
    let mut txs = Vec::new();
    let mut accounts = Vec::new();
    let mut contracts = Vec::new();
    let mut seen_contracts = BTreeSet::new();
    for store in &stores {
        for chain in store.chains() {
            for addr in store.addresses(&chain) {
                accounts.push((chain.clone(), addr, store.kind_of(&addr, &chain)));
            }
            for c in store.contracts(&chain)? {
                // The same deployment may be captured by several fixtures.
                if seen_contracts.insert((c.chain.clone(), c.address)) {
                    contracts.push(c);
                }
            }
        }
        txs.extend(store.txs().iter().cloned());
    }
    txs.sort_by(|a, b| a.tx_hash.cmp(&b.tx_hash));
    txs.dedup();
    Ok(ChainStore::from_parts(txs, accounts, contracts)?)
}

pub fn load_imports(cfg: &PipelineConfig) -> Result<ImportStore> {
    match &cfg.imports {
        Some(dir) => ImportStore::load(dir).with_context(|| format!("loading import snapshot {}", dir.display())),
        None => Ok(ImportStore::new()),
    }
}

/// A contract source from the corpus directory or from a harvested URL.
#[derive(Debug, Clone)]
pub struct CorpusFile {
    /// File name, or the URL for harvested sources.
    pub name: String,
    pub origin: Origin,
    pub source: String,
    pub unit: Result<SourceUnit, SyntaxError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Corpus,
    Url,
}

impl CorpusFile {
    pub fn new(name: String, origin: Origin, source: String) -> Self {
        let unit = parse_source(&source);
        CorpusFile {
            name,
            origin,
            source,
            unit,
        }
    }
}

/// `.sol` files in `dir`, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusFile>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading corpus {}", dir.display()))? {
        let path = entry.with_context(|| format!("reading corpus {}", dir.display()))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "sol") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .par_iter()
        .map(|p| {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            let name = p.file_name().expect("file path").to_string_lossy().into_owned();
            Ok(CorpusFile::new(name, Origin::Corpus, String::from_utf8_lossy(&bytes).into_owned()))
        })
        .collect()
}

pub fn parsed_units(corpus: &[CorpusFile]) -> Vec<(String, SourceUnit)> {
    corpus
        .iter()
        .filter_map(|f| f.unit.as_ref().ok().map(|u| (f.name.clone(), u.clone())))
        .collect()
}

/// Sink signatures from the contract corpus. Without a corpus, the verified
/// sources captured in the chain store stand in for it.
pub fn signature_catalog(corpus: &[(String, SourceUnit)], store: &ChainStore) -> Result<SignatureCatalog> {
    if !corpus.is_empty() {
        let units: Vec<SourceUnit> = corpus.iter().map(|(_, u)| u.clone()).collect();
        return Ok(harvest_sink_signatures(&units));
    }
    let mut units = Vec::new();
    for chain in store.chains() {
        for c in store.contracts(&chain)? {
            if let Some(unit) = c.source.as_deref().and_then(|s| parse_source(s).ok()) {
                units.push(unit);
            }
        }
    }
    Ok(harvest_sink_signatures(&units))
}

/// Corpus for commands that only need it for the catalog: optional.
pub(crate) fn optional_corpus(cfg: &PipelineConfig) -> Result<Vec<(String, SourceUnit)>> {
    match &cfg.contracts {
        Some(dir) => Ok(parsed_units(&load_corpus(dir)?)),
        None => Ok(Vec::new()),
    }
}

pub(crate) fn require_chains(cfg: &PipelineConfig, what: &str) -> Result<ChainStore> {
    if cfg.chains.is_empty() {
        return Err(ConfigError(format!("{what} needs at least one chain fixture (--chain or paths.chains)")).into());
    }
    load_chains(&cfg.chains)
}

/// Runs every stage whose inputs are configured, feeding each stage's
/// results into the next, and builds cluster profiles along the way.
pub fn report_all(cfg: &PipelineConfig) -> Result<String> {
    if cfg.videos.is_none() && cfg.contracts.is_none() {
        return Err(ConfigError("report-all needs paths.videos or paths.contracts".into()).into());
    }
    let mut lines = Vec::new();
    let imports = load_imports(cfg)?;

    let triaged = match &cfg.videos {
        Some(_) => {
            let t = triage::run(cfg)?;
            lines.push(t.summary());
            Some(t)
        }
        None => None,
    };

    let mut corpus = match &cfg.contracts {
        Some(dir) => load_corpus(dir)?,
        None => Vec::new(),
    };
    if let Some(t) = &triaged {
        for url in t.scam_solidity_urls() {
            if let Some(src) = imports.get(&url).or_else(|| imports.get(&format!("https://{url}"))) {
                corpus.push(CorpusFile::new(url, Origin::Url, src.to_string()));
            }
        }
    }
    let extracted = extract::run_on(cfg, &imports, corpus)?;
    lines.push(extracted.summary());

    let mut seeds = extracted.addresses.clone();
    if let Some(p) = &cfg.seeds {
        seeds.extend(read_addresses(p)?);
    }

    let mut profiles = ProfileBuilder::new();
    for c in &extracted.contracts {
        for addr in &c.addresses {
            profiles.entry(*addr);
            if c.origin == Origin::Url {
                profiles.add_url(*addr, &c.file);
                if let Some(t) = &triaged {
                    for (account, title) in t.videos_linking(&c.file) {
                        profiles.add_video(*addr, account, title);
                    }
                }
            }
        }
    }

    let mut ledgers = Vec::new();
    if !cfg.chains.is_empty() && !seeds.is_empty() {
        let store = load_chains(&cfg.chains)?;
        let units = extracted.units.clone();
        let catalog = signature_catalog(&units, &store)?;
        let expanded = expand::run_on(cfg, &store, &seeds, &units, &catalog)?;
        lines.push(expanded.summary());
        let scams = expanded.all_addresses();
        for addr in &scams {
            let p = profiles.entry(*addr);
            for chain in store.chains() {
                if store.history(addr, &chain).next().is_some() {
                    p.chains.insert(chain);
                }
            }
        }
        if cfg.prices.is_some() {
            let v = victims::run_on(cfg, &store, &scams, &catalog)?;
            lines.push(v.summary());
            ledgers = v.ledgers;
        } else {
            lines.push("victims: skipped (no price table configured)".into());
        }
        for ledger in &ledgers {
            for (a, b) in scamlens_core::cluster::scam_counterparties(&store, ledger)? {
                profiles.add_counterparty(a, b);
            }
        }
    }

    let mut all_profiles = profiles.build();
    if let Some(p) = &cfg.profiles {
        all_profiles.extend(cluster::read_profiles(p)?);
    }
    let clustered = cluster::run_on(cfg, &all_profiles, &ledgers)?;
    lines.push(clustered.summary());
    Ok(lines.join("\n"))
}
