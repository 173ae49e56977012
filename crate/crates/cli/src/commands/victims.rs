use std::collections::BTreeSet;
use std::fs::File;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use serde::Serialize;

use scamlens_core::chain::{format_coin, Chain, ChainStore};
use scamlens_core::deobfuscate::SignatureCatalog;
use scamlens_core::victims::{
    aggregate_loss, classify_victim_txs, money_flow_graph, monthly_timeline, tx_count_distributions,
    victim_overlap, BucketTable, DepositorSource, LossReport, PriceTable, VictimLedger,
};
use scamlens_core::Address;

use super::{optional_corpus, read_addresses, require, require_chains, signature_catalog};
use crate::config::PipelineConfig;
use crate::output::ReportDir;
use crate::ConfigError;

pub struct VictimsOutcome {
    pub ledgers: Vec<VictimLedger>,
    pub losses: Vec<LossReport>,
}

impl VictimsOutcome {
    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .losses
            .iter()
            .map(|l| {
                format!(
                    "{}: {} victims, {} txs, {} {}",
                    l.chain,
                    l.victims,
                    l.victim_txs,
                    format_coin(l.total_wei),
                    l.chain.coin()
                )
            })
            .collect();
        format!("victims: {}", parts.join("; "))
    }
}

#[derive(Serialize)]
struct DistributionRow<'a> {
    chain: &'a Chain,
    bucket: &'a str,
    count: usize,
    percent: f64,
}

#[derive(Serialize)]
struct TimelineRow<'a> {
    chain: &'a Chain,
    month: &'a str,
    tx_count: usize,
    total_amount: String,
}

#[derive(Serialize)]
struct TxRow<'a> {
    chain: &'a Chain,
    tx_hash: String,
    block_time: String,
    from: Address,
    to: Address,
    amount: String,
    call_signature: Option<&'a str>,
    depositor: Option<Address>,
    depositor_source: DepositorSource,
    scammer_to_scammer: bool,
}

fn distribution_rows<'a>(chain: &'a Chain, table: &'a BucketTable) -> impl Iterator<Item = DistributionRow<'a>> {
    table.rows.iter().map(move |r| DistributionRow {
        chain,
        bucket: &r.bucket,
        count: r.count,
        percent: r.percent,
    })
}

/// Dates of the first and last transaction on `chain`.
fn activity_span(store: &ChainStore, chain: &Chain) -> Option<(NaiveDate, NaiveDate)> {
    let mut on_chain = store.txs().iter().filter(|t| &t.chain == chain);
    let first = on_chain.next()?;
    let last = on_chain.last().unwrap_or(first);
    Some((first.block_time.date_naive(), last.block_time.date_naive()))
}

pub fn run(cfg: &PipelineConfig) -> Result<VictimsOutcome> {
    let scams = read_addresses(require(&cfg.scam_addresses, "a scam address file")?)?;
    if scams.is_empty() {
        return Err(ConfigError("the scam address file is empty".into()).into());
    }
    require(&cfg.prices, "a price table")?;
    let store = require_chains(cfg, "victims")?;
    let corpus = optional_corpus(cfg)?;
    let catalog = signature_catalog(&corpus, &store)?;
    run_on(cfg, &store, &scams, &catalog)
}

pub fn run_on(
    cfg: &PipelineConfig,
    store: &ChainStore,
    scams: &BTreeSet<Address>,
    catalog: &SignatureCatalog,
) -> Result<VictimsOutcome> {
    let price_path = require(&cfg.prices, "a price table")?;
    let prices = PriceTable::from_csv(File::open(price_path).with_context(|| format!("opening {}", price_path.display()))?)
        .with_context(|| format!("reading {}", price_path.display()))?;

    let mut out = ReportDir::create(&cfg.out_dir, "victims", cfg.format)?;
    let mut ledgers = Vec::new();
    let mut losses = Vec::new();
    let mut victim_dist = Vec::new();
    let mut scam_dist = Vec::new();
    let mut timelines = Vec::new();
    for chain in store.chains() {
        let ledger = classify_victim_txs(store, scams, catalog, &chain)?;
        let period = cfg.period.or_else(|| activity_span(store, &chain));
        let loss = match period {
            Some(p) => aggregate_loss(&ledger, &prices, p)?,
            None => aggregate_loss(&ledger, &prices, (NaiveDate::MIN, NaiveDate::MIN))?,
        };
        let (v, s) = tx_count_distributions(&ledger, &cfg.victim_buckets, &cfg.scam_buckets)?;
        victim_dist.push((chain.clone(), v));
        scam_dist.push((chain.clone(), s));
        timelines.push((chain.clone(), monthly_timeline(&ledger)));

        let receivers: BTreeSet<Address> = ledger.victim_txs.iter().map(|v| v.tx.to).collect();
        for addr in receivers {
            let graph = money_flow_graph(store, &addr, &chain)?;
            out.text(
                &format!("flows/{}/{}.dot", chain, addr.to_lower_hex()),
                "flow",
                &graph.to_dot(chain.coin()),
            )?;
        }
        losses.push(loss);
        ledgers.push(ledger);
    }

    let loss_rows: Vec<_> = losses.iter().map(LossReport::row).collect();
    out.table("loss", &loss_rows)?;
    let rows: Vec<_> = victim_dist.iter().flat_map(|(c, t)| distribution_rows(c, t)).collect();
    out.table("victim_tx_distribution", &rows)?;
    let rows: Vec<_> = scam_dist.iter().flat_map(|(c, t)| distribution_rows(c, t)).collect();
    out.table("scam_tx_distribution", &rows)?;
    let rows: Vec<_> = timelines
        .iter()
        .flat_map(|(chain, months)| {
            months.iter().map(move |m| TimelineRow {
                chain,
                month: &m.month,
                tx_count: m.tx_count,
                total_amount: format_coin(m.total_wei),
            })
        })
        .collect();
    out.table("timeline", &rows)?;

    let mut tx_rows = Vec::new();
    for l in &ledgers {
        let tagged = l.victim_txs.iter().map(|v| (v, false)).chain(l.scammer_to_scammer_txs.iter().map(|v| (v, true)));
        for (v, s2s) in tagged {
            tx_rows.push(TxRow {
                chain: &l.chain,
                tx_hash: v.tx.tx_hash.to_string(),
                block_time: v.tx.block_time.to_rfc3339(),
                from: v.tx.from,
                to: v.tx.to,
                amount: format_coin(v.tx.value_wei),
                call_signature: v.tx.call_signature.as_deref(),
                depositor: v.depositor,
                depositor_source: v.depositor_source,
                scammer_to_scammer: s2s,
            });
        }
    }
    out.table("victim_txs", &tx_rows)?;
    out.json("ledgers", &ledgers)?;
    if ledgers.len() > 1 {
        out.json("overlap", &victim_overlap(&ledgers.iter().collect::<Vec<_>>()))?;
    }
    out.finish()?;
    Ok(VictimsOutcome { ledgers, losses })
}
