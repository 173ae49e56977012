use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use scamlens_core::cluster::{
    build_clusters, cluster_stats, linked, scam_counterparties, ClusterReport, ClusterSummary, Linkage,
    ScamProfile,
};
use scamlens_core::victims::{classify_victim_txs, VictimLedger};
use scamlens_core::Address;

use super::{load_chains, optional_corpus, require, signature_catalog};
use crate::config::PipelineConfig;
use crate::output::ReportDir;

pub struct ClusterOutcome {
    pub report: ClusterReport,
    pub summary: ClusterSummary,
    pub links: Vec<LinkRow>,
}

impl ClusterOutcome {
    pub fn summary(&self) -> String {
        format!(
            "cluster: {} clusters, {} singletons, {} addresses",
            self.report.clusters.len(),
            self.report.singletons.len(),
            self.report.totals.addresses
        )
    }
}

/// A direct link between two members of the same cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkRow {
    pub cluster_id: usize,
    pub a: Address,
    pub b: Address,
    pub linkage: Linkage,
}

#[derive(Serialize)]
struct MemberRow {
    cluster_id: usize,
    address: Address,
}

/// JSON-lines profile file; blank lines are skipped.
pub fn read_profiles(path: &Path) -> Result<Vec<ScamProfile>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}: bad profile", path.display(), i + 1)))
        .collect()
}

pub fn run(cfg: &PipelineConfig) -> Result<ClusterOutcome> {
    let mut profiles = read_profiles(require(&cfg.profiles, "a profile file")?)?;
    let mut ledgers = Vec::new();
    if !cfg.chains.is_empty() && !profiles.is_empty() {
        let store = load_chains(&cfg.chains)?;
        let corpus = optional_corpus(cfg)?;
        let catalog = signature_catalog(&corpus, &store)?;
        let scams: BTreeSet<Address> = profiles.iter().map(|p| p.address).collect();
        for chain in store.chains() {
            ledgers.push(classify_victim_txs(&store, &scams, &catalog, &chain)?);
        }
        let mut extra = scamlens_core::cluster::ProfileBuilder::new();
        for ledger in &ledgers {
            for (a, b) in scam_counterparties(&store, ledger)? {
                extra.add_counterparty(a, b);
            }
        }
        profiles.extend(extra.build());
    }
    run_on(cfg, &profiles, &ledgers)
}

fn links(report: &ClusterReport, profiles: &[ScamProfile]) -> Vec<LinkRow> {
    let mut rows = Vec::new();
    for c in &report.clusters {
        let mut members: Vec<ScamProfile> = Vec::new();
        for addr in &c.members {
            let mut merged = ScamProfile::new(*addr);
            for p in profiles.iter().filter(|p| p.address == *addr) {
                merged.chains.extend(p.chains.iter().cloned());
                merged.contract_urls.extend(p.contract_urls.iter().cloned());
                merged.accounts.extend(p.accounts.iter().cloned());
                merged.video_titles.extend(p.video_titles.iter().cloned());
                merged.counterparty_scam_addrs.extend(&p.counterparty_scam_addrs);
            }
            members.push(merged);
        }
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if let Some(linkage) = linked(a, b) {
                    rows.push(LinkRow {
                        cluster_id: c.id,
                        a: a.address,
                        b: b.address,
                        linkage,
                    });
                }
            }
        }
    }
    rows
}

pub fn run_on(cfg: &PipelineConfig, profiles: &[ScamProfile], ledgers: &[VictimLedger]) -> Result<ClusterOutcome> {
    let report = build_clusters(profiles, ledgers);
    let summary = cluster_stats(&report.clusters, &report.totals, cfg.top_k);
    let links = links(&report, profiles);

    let mut out = ReportDir::create(&cfg.out_dir, "cluster", cfg.format)?;
    out.json("clusters", &report)?;
    out.json("summary", &summary)?;
    out.table("top", &summary.top)?;
    let members: Vec<MemberRow> = report
        .clusters
        .iter()
        .flat_map(|c| c.members.iter().map(move |a| MemberRow { cluster_id: c.id, address: *a }))
        .collect();
    out.table("members", &members)?;
    out.table("links", &links)?;
    out.lines("singletons.txt", "singletons", &report.singletons)?;
    out.finish()?;
    Ok(ClusterOutcome { report, summary, links })
}
