//! Victim transaction filtering, loss aggregation and reporting tables.

mod flow;
mod loss;
mod stats;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::address::Address;
use crate::chain::{Chain, ChainError, ChainQuery, ChainTx, TxHash, TxKind};
use crate::deobfuscate::SignatureCatalog;

pub use flow::{money_flow_graph, FlowEdge, FlowGraph, FlowNode};
pub use loss::{
    aggregate_loss, format_usd, format_wei, parse_decimal, LossError, LossReport, LossRow, PriceTable,
};
pub use stats::{
    count_distribution, cross_chain_from_counts, monthly_timeline, tx_count_distributions, victim_overlap, Bucket,
    BucketError, BucketRow, BucketTable, MonthRow, Overlap, DEFAULT_SCAM_BUCKETS,
    DEFAULT_VICTIM_BUCKETS,
};

/// How the depositor behind an internal transfer was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DepositorSource {
    /// Sender of the external transaction in `trace_parent`.
    TraceParent,
    /// Sender of the latest external transfer funding the draining contract.
    FundingTx,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VictimTx {
    pub tx: ChainTx,
    pub depositor: Option<Address>,
    pub depositor_source: DepositorSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VictimAudit {
    pub tx_hash: TxHash,
    pub issue: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VictimLedger {
    pub chain: Chain,
    pub scam_addresses: BTreeSet<Address>,
    pub victim_txs: Vec<VictimTx>,
    pub victim_addrs: BTreeSet<Address>,
    pub scammer_to_scammer_txs: Vec<VictimTx>,
    /// Incoming transfers dropped for not being internal.
    pub dropped_external: usize,
    /// Internal transfers dropped for a signature outside the catalog.
    pub dropped_signature: usize,
    pub audit: Vec<VictimAudit>,
}

impl VictimLedger {
    pub fn empty(chain: Chain) -> Self {
        VictimLedger {
            chain,
            scam_addresses: BTreeSet::new(),
            victim_txs: Vec::new(),
            victim_addrs: BTreeSet::new(),
            scammer_to_scammer_txs: Vec::new(),
            dropped_external: 0,
            dropped_signature: 0,
            audit: Vec::new(),
        }
    }

    pub fn total_wei(&self) -> u128 {
        self.victim_txs.iter().map(|v| v.tx.value_wei).sum()
    }

    /// Loss per victim. Transfers whose depositor is unknown each count as
    /// a separate anonymous victim, keyed by tx hash.
    pub fn per_victim_totals(&self) -> BTreeMap<String, (u128, usize)> {
        let mut out: BTreeMap<String, (u128, usize)> = BTreeMap::new();
        for v in &self.victim_txs {
            let key = match v.depositor {
                Some(a) => a.to_lower_hex(),
                None => v.tx.tx_hash.to_string(),
            };
            let e = out.entry(key).or_default();
            e.0 += v.tx.value_wei;
            e.1 += 1;
        }
        out
    }
}

fn depositor<Q: ChainQuery + ?Sized>(
    query: &Q,
    tx: &ChainTx,
) -> Result<(Option<Address>, DepositorSource), ChainError> {
    if let Some(parent) = &tx.trace_parent {
        if let Some(p) = query.tx(parent)? {
            if p.kind == TxKind::External {
                return Ok((Some(p.from), DepositorSource::TraceParent));
            }
        }
    }
    let funding = query
        .tx_history(&tx.from, &tx.chain)?
        .into_iter()
        .filter(|t| {
            t.kind == TxKind::External && t.to == tx.from && t.value_wei > 0 && t.block_time <= tx.block_time
        })
        .last();
    Ok(match funding {
        Some(f) => (Some(f.from), DepositorSource::FundingTx),
        None => (None, DepositorSource::Unknown),
    })
}

/// Keeps incoming transfers to `scams` that are internal (F1) and triggered
/// by a catalogued function (F2), then sets aside those funded by a scam
/// address itself (F3).
pub fn classify_victim_txs<Q: ChainQuery + ?Sized>(
    query: &Q,
    scams: &BTreeSet<Address>,
    catalog: &SignatureCatalog,
    chain: &Chain,
) -> Result<VictimLedger, ChainError> {
    let mut ledger = VictimLedger::empty(chain.clone());
    ledger.scam_addresses = scams.clone();

    let mut incoming: BTreeMap<TxHash, ChainTx> = BTreeMap::new();
    for scam in scams {
        for tx in query.tx_history(scam, chain)? {
            if tx.to == *scam {
                incoming.insert(tx.tx_hash.clone(), tx);
            }
        }
    }
    let mut incoming: Vec<ChainTx> = incoming.into_values().collect();
    incoming.sort_by(|a, b| a.order_key().cmp(&b.order_key()));

    for tx in incoming {
        if tx.kind != TxKind::Internal {
            ledger.dropped_external += 1;
            continue;
        }
        if !tx.call_signature.as_deref().is_some_and(|s| catalog.contains(s)) {
            ledger.dropped_signature += 1;
            continue;
        }
        let (depositor, source) = depositor(query, &tx)?;
        let entry = VictimTx {
            tx,
            depositor,
            depositor_source: source,
        };
        match depositor {
            Some(d) if scams.contains(&d) => ledger.scammer_to_scammer_txs.push(entry),
            Some(d) => {
                ledger.victim_addrs.insert(d);
                ledger.victim_txs.push(entry);
            }
            None => {
                ledger.audit.push(VictimAudit {
                    tx_hash: entry.tx.tx_hash.clone(),
                    issue: "MissingTraceParent: depositor could not be determined".into(),
                });
                ledger.victim_txs.push(entry);
            }
        }
    }
    Ok(ledger)
}
