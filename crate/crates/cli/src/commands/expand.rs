use std::collections::BTreeSet;

use anyhow::Result;
use serde::Serialize;

use scamlens_core::chain::{expand_addresses_with, Chain, ChainStore, ExpansionReport};
use scamlens_core::deobfuscate::SignatureCatalog;
use scamlens_core::similarity::normalize;
use scamlens_core::solidity::SourceUnit;
use scamlens_core::Address;

use super::{optional_corpus, read_addresses, require, require_chains, signature_catalog};
use crate::config::PipelineConfig;
use crate::output::ReportDir;
use crate::ConfigError;

pub struct ExpandOutcome {
    pub seeds: BTreeSet<Address>,
    pub per_chain: Vec<(Chain, ExpansionReport)>,
}

impl ExpandOutcome {
    /// Seeds plus every address found on any chain.
    pub fn all_addresses(&self) -> BTreeSet<Address> {
        let mut all = self.seeds.clone();
        for (_, r) in &self.per_chain {
            all.extend(&r.new_addresses);
        }
        all
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .per_chain
            .iter()
            .map(|(c, r)| format!("{c}: +{} in {} rounds", r.new_addresses.len(), r.rounds))
            .collect();
        format!("expand: {} seeds, {}", self.seeds.len(), parts.join(", "))
    }
}

#[derive(Serialize)]
struct ChainSummary<'a> {
    chain: &'a Chain,
    rounds: usize,
    capped: bool,
    new_addresses: &'a BTreeSet<Address>,
    victim_contracts: &'a BTreeSet<Address>,
}

#[derive(Serialize)]
struct AuditRow<'a> {
    chain: &'a Chain,
    round: usize,
    candidate: &'a str,
    similar_to: Option<Address>,
    score_bps: Option<u64>,
    decision: String,
    /// Remaining decision fields as compact JSON.
    detail: String,
}

pub fn run(cfg: &PipelineConfig) -> Result<ExpandOutcome> {
    let seeds = read_addresses(require(&cfg.seeds, "a seed address file")?)?;
    if seeds.is_empty() {
        return Err(ConfigError("the seed address file is empty".into()).into());
    }
    let store = require_chains(cfg, "expand")?;
    let corpus = optional_corpus(cfg)?;
    let catalog = signature_catalog(&corpus, &store)?;
    run_on(cfg, &store, &seeds, &corpus, &catalog)
}

pub fn run_on(
    cfg: &PipelineConfig,
    store: &ChainStore,
    seeds: &BTreeSet<Address>,
    corpus: &[(String, SourceUnit)],
    catalog: &SignatureCatalog,
) -> Result<ExpandOutcome> {
    let normalized: Vec<_> = corpus.iter().map(|(name, unit)| normalize(unit, name.clone())).collect();
    let mut per_chain = Vec::new();
    for chain in store.chains() {
        let report = expand_addresses_with(store, &chain, seeds, &normalized, catalog, &cfg.thresholds)?;
        per_chain.push((chain, report));
    }
    let outcome = ExpandOutcome {
        seeds: seeds.clone(),
        per_chain,
    };

    let mut out = ReportDir::create(&cfg.out_dir, "expand", cfg.format)?;
    let summaries: Vec<ChainSummary> = outcome
        .per_chain
        .iter()
        .map(|(chain, r)| ChainSummary {
            chain,
            rounds: r.rounds,
            capped: r.capped,
            new_addresses: &r.new_addresses,
            victim_contracts: &r.victim_contracts,
        })
        .collect();
    out.json("summary", &summaries)?;
    let mut rows = Vec::new();
    for (chain, r) in &outcome.per_chain {
        for a in &r.audit {
            let mut value = serde_json::to_value(&a.decision)?;
            let map = value.as_object_mut().expect("decisions serialize as objects");
            let decision = map
                .remove("decision")
                .and_then(|d| d.as_str().map(str::to_string))
                .unwrap_or_default();
            let detail = if map.is_empty() { String::new() } else { serde_json::to_string(map)? };
            rows.push(AuditRow {
                chain,
                round: a.round,
                candidate: &a.candidate,
                similar_to: a.similar_to,
                score_bps: a.score_bps,
                decision,
                detail,
            });
        }
    }
    out.table("audit", &rows)?;
    out.lines("addresses.txt", "addresses", &outcome.all_addresses())?;
    out.finish()?;
    Ok(outcome)
}
