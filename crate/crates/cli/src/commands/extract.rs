use std::collections::BTreeSet;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use scamlens_core::deobfuscate::{
    classify_backdoor, evaluate_address, evaluate_probe, find_transfer_sinks, harvest_sink_signatures,
    rewrite_with_probe, AddressResolution, BackdoorKind, ImportStore, Probe, ResolutionStatus, SignatureCatalog,
    UnresolvedReason,
};
use scamlens_core::solidity::{emit_expression, SourceUnit};
use scamlens_core::Address;

use super::{load_corpus, load_imports, require, CorpusFile, Origin};
use crate::config::PipelineConfig;
use crate::output::ReportDir;

#[derive(Debug, Clone, Serialize)]
pub struct SinkReport {
    pub contract: String,
    pub function: String,
    pub site: String,
    pub destination: String,
    pub resolution: AddressResolution,
    /// Probe file, relative to the probes directory.
    pub probe: Option<String>,
    /// Whether evaluating the probe gives the same address.
    pub probe_agrees: Option<bool>,
    pub probe_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractReport {
    pub file: String,
    pub origin: Origin,
    pub status: ResolutionStatus,
    pub reason: Option<UnresolvedReason>,
    pub message: Option<String>,
    pub addresses: Vec<Address>,
    pub backdoor: Option<BackdoorKind>,
    pub threshold_wei: Option<u128>,
    pub refund_capable: bool,
    pub sinks: Vec<SinkReport>,
}

/// Flat row for the contracts table.
#[derive(Debug, Serialize)]
struct ContractRow<'a> {
    file: &'a str,
    origin: Origin,
    status: ResolutionStatus,
    reason: Option<UnresolvedReason>,
    addresses: String,
    backdoor: Option<BackdoorKind>,
    threshold_wei: Option<String>,
    sinks: usize,
}

#[derive(Debug, Serialize)]
struct Summary {
    contracts: usize,
    parsed: usize,
    resolved: usize,
    skipped_caller_refund: usize,
    unresolved: usize,
    sinks: usize,
    distinct_addresses: usize,
}

pub struct ExtractOutcome {
    pub contracts: Vec<ContractReport>,
    pub catalog: SignatureCatalog,
    pub addresses: BTreeSet<Address>,
    /// Parsed corpus entries, named by file or URL.
    pub units: Vec<(String, SourceUnit)>,
}

impl ExtractOutcome {
    fn count(&self, status: ResolutionStatus) -> usize {
        self.contracts.iter().filter(|c| c.status == status).count()
    }

    pub fn summary(&self) -> String {
        format!(
            "extract: {} contracts, {} resolved, {} caller-refund, {} unresolved, {} distinct addresses",
            self.contracts.len(),
            self.count(ResolutionStatus::Resolved),
            self.count(ResolutionStatus::SkippedCallerRefund),
            self.count(ResolutionStatus::Unresolved),
            self.addresses.len()
        )
    }
}

/// File-system safe stem for probe names; URLs become underscores.
fn probe_stem(name: &str) -> String {
    let stem = name.strip_suffix(".sol").unwrap_or(name);
    stem.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn analyze(file: &CorpusFile, imports: &ImportStore) -> (ContractReport, Vec<(String, Probe)>) {
    let unit = match &file.unit {
        Ok(u) => u,
        Err(e) => {
            let report = ContractReport {
                file: file.name.clone(),
                origin: file.origin,
                status: ResolutionStatus::Unresolved,
                reason: Some(UnresolvedReason::ParseFailure),
                message: Some(e.to_string()),
                addresses: Vec::new(),
                backdoor: None,
                threshold_wei: None,
                refund_capable: false,
                sinks: Vec::new(),
            };
            return (report, Vec::new());
        }
    };
    let stem = probe_stem(&file.name);
    let mut pairs = Vec::new();
    let mut sinks = Vec::new();
    let mut probes = Vec::new();
    for (i, sink) in find_transfer_sinks(unit).into_iter().enumerate() {
        let resolution = evaluate_address(unit, &sink, imports);
        let (mut probe, mut probe_agrees, mut probe_error) = (None, None, None);
        match rewrite_with_probe(unit, &sink) {
            Ok(p) => {
                let name = if i == 0 { format!("{stem}.probe.sol") } else { format!("{stem}.{i}.probe.sol") };
                match evaluate_probe(&p, imports) {
                    Ok(r) if resolution.is_resolved() => probe_agrees = Some(r.address == resolution.address),
                    Ok(_) => {}
                    Err(e) => probe_error = Some(e.to_string()),
                }
                probe = Some(name.clone());
                probes.push((name, p));
            }
            Err(e) => probe_error = Some(e.to_string()),
        }
        sinks.push(SinkReport {
            contract: sink.contract.clone(),
            function: sink.function.clone(),
            site: sink.site.to_string(),
            destination: emit_expression(&sink.dest_expr),
            resolution: resolution.clone(),
            probe,
            probe_agrees,
            probe_error,
        });
        pairs.push((sink, resolution));
    }
    let profile = classify_backdoor(unit, &pairs);
    let addresses: Vec<Address> = sinks
        .iter()
        .filter_map(|s| s.resolution.address)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let resolutions = || sinks.iter().map(|s| &s.resolution);
    let (status, reason, message) = if !addresses.is_empty() {
        (ResolutionStatus::Resolved, None, None)
    } else if let Some(r) = resolutions().find(|r| r.status == ResolutionStatus::Unresolved) {
        (ResolutionStatus::Unresolved, r.reason, r.message.clone())
    } else if !sinks.is_empty() {
        (ResolutionStatus::SkippedCallerRefund, None, None)
    } else {
        (ResolutionStatus::Unresolved, None, Some("no native transfer sink".to_string()))
    };
    let report = ContractReport {
        file: file.name.clone(),
        origin: file.origin,
        status,
        reason,
        message,
        addresses,
        backdoor: Some(profile.kind),
        threshold_wei: profile.threshold_wei,
        refund_capable: profile.refund_capable,
        sinks,
    };
    (report, probes)
}

pub fn run(cfg: &PipelineConfig) -> Result<ExtractOutcome> {
    let dir = require(&cfg.contracts, "a contract corpus")?;
    let corpus = load_corpus(dir)?;
    let imports = load_imports(cfg)?;
    run_on(cfg, &imports, corpus)
}

/// Analyses `corpus` and writes the `extract` and `probes` directories.
pub fn run_on(cfg: &PipelineConfig, imports: &ImportStore, corpus: Vec<CorpusFile>) -> Result<ExtractOutcome> {
    let analysed: Vec<_> = corpus.par_iter().map(|f| analyze(f, imports)).collect();
    let units = super::parsed_units(&corpus);
    let catalog = harvest_sink_signatures(&units.iter().map(|(_, u)| u.clone()).collect::<Vec<_>>());

    let mut probe_dir = ReportDir::create(&cfg.out_dir, "probes", cfg.format)?;
    let mut contracts = Vec::new();
    for (report, probes) in analysed {
        for (name, p) in probes {
            probe_dir.text(&name, "probe", &p.text)?;
        }
        contracts.push(report);
    }
    probe_dir.finish()?;

    let addresses: BTreeSet<Address> = contracts.iter().flat_map(|c| c.addresses.iter().copied()).collect();
    let outcome = ExtractOutcome {
        contracts,
        catalog,
        addresses,
        units,
    };

    let mut out = ReportDir::create(&cfg.out_dir, "extract", cfg.format)?;
    let rows: Vec<ContractRow> = outcome
        .contracts
        .iter()
        .map(|c| ContractRow {
            file: &c.file,
            origin: c.origin,
            status: c.status,
            reason: c.reason,
            addresses: c.addresses.iter().map(Address::to_string).collect::<Vec<_>>().join(" "),
            backdoor: c.backdoor,
            threshold_wei: c.threshold_wei.map(|t| t.to_string()),
            sinks: c.sinks.len(),
        })
        .collect();
    out.table("contracts", &rows)?;
    out.json("details", &outcome.contracts)?;
    out.json("catalog", &outcome.catalog)?;
    out.json(
        "summary",
        &Summary {
            contracts: outcome.contracts.len(),
            parsed: outcome.units.len(),
            resolved: outcome.count(ResolutionStatus::Resolved),
            skipped_caller_refund: outcome.count(ResolutionStatus::SkippedCallerRefund),
            unresolved: outcome.count(ResolutionStatus::Unresolved),
            sinks: outcome.contracts.iter().map(|c| c.sinks.len()).sum(),
            distinct_addresses: outcome.addresses.len(),
        },
    )?;
    out.lines("addresses.txt", "addresses", &outcome.addresses)?;
    out.finish()?;
    Ok(outcome)
}
