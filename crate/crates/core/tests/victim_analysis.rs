mod common;

use std::collections::BTreeSet;

use chrono::{NaiveDate, TimeZone, Utc};
use num_rational::BigRational;
use scamlens_core::chain::{load_fixture, AccountKind, Chain, ChainStore, ChainTx, TxHash, TxKind};
use scamlens_core::deobfuscate::SignatureCatalog;
use scamlens_core::victims::{
    aggregate_loss, classify_victim_txs, cross_chain_from_counts, money_flow_graph, monthly_timeline,
    parse_decimal, tx_count_distributions, victim_overlap, DepositorSource, PriceTable, VictimLedger,
    VictimTx, DEFAULT_SCAM_BUCKETS, DEFAULT_VICTIM_BUCKETS,
};
use scamlens_core::Address;

use common::fixtures_dir;

const E: u128 = 1_000_000_000_000_000_000;
const SCAM: &str = "0x2c1b6D43A52ea97d61979C22B7aa7B83352c1a2d";
const SCAM2: &str = "0xCdf8BFE2C60B97b3fe47ac74b3FCaE89aC2A450a";
const BOT: &str = "0x661ee2114cca369e51e41179892ee2d3ef76eb1b";
const VICTIM: &str = "0xf91a0f615113ccbc85aa47e9a7ded4b3652316e4";
const CASHOUT: &str = "0xE0876eC5fdcB4a3017C8EAf655C6D2aBFcF0C506";

fn a(text: &str) -> Address {
    text.parse().unwrap()
}

fn addr(n: u8) -> Address {
    let mut b = [0u8; 20];
    b[19] = n;
    Address(b)
}

fn h(n: u8) -> TxHash {
    format!("0x{}", format!("{n:02x}").repeat(32)).parse().unwrap()
}

fn catalog() -> SignatureCatalog {
    [("start()".to_string(), 1)].into_iter().collect()
}

fn r(text: &str) -> BigRational {
    parse_decimal(text).unwrap()
}

fn case_ledger() -> (ChainStore, VictimLedger) {
    let store = load_fixture(&fixtures_dir().join("chain/case_study")).unwrap();
    let scams = BTreeSet::from([a(SCAM), a(SCAM2)]);
    let ledger = classify_victim_txs(&store, &scams, &catalog(), &Chain::Eth).unwrap();
    (store, ledger)
}

fn tx(hash: u8, month: u32, day: u32, from: Address, to: Address, value: u128) -> ChainTx {
    ChainTx {
        tx_hash: h(hash),
        chain: Chain::Eth,
        block_time: Utc.with_ymd_and_hms(2021, month, day, 12, 0, 0).unwrap(),
        from,
        to,
        value_wei: value,
        kind: TxKind::Internal,
        call_signature: Some("start()".into()),
        trace_parent: None,
    }
}

/// A ledger built directly from (depositor, value) pairs.
fn ledger_of(entries: &[(u8, u128)], scams: &[u8]) -> VictimLedger {
    let mut l = VictimLedger::empty(Chain::Eth);
    l.scam_addresses = scams.iter().map(|&s| addr(s)).collect();
    for (i, &(victim, value)) in entries.iter().enumerate() {
        l.victim_addrs.insert(addr(victim));
        l.victim_txs.push(VictimTx {
            tx: tx(i as u8 + 1, 3, 1, addr(100 + i as u8), addr(scams[0]), value),
            depositor: Some(addr(victim)),
            depositor_source: DepositorSource::TraceParent,
        });
    }
    l
}

fn day(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

#[test]
fn case_study_victim_transaction() {
    let (_, ledger) = case_ledger();
    let from_bot: Vec<_> = ledger.victim_txs.iter().filter(|v| v.tx.from == a(BOT)).collect();
    assert_eq!(from_bot.len(), 1);
    assert_eq!(from_bot[0].depositor, Some(a(VICTIM)));
    assert_eq!(from_bot[0].depositor_source, DepositorSource::TraceParent);
    assert_eq!(from_bot[0].tx.value_wei, 5 * E);
    assert_eq!(
        from_bot[0].tx.trace_parent.as_ref().unwrap().as_str(),
        "0x8742dd932f542b9595af3289ca96cbb0a39064aa2d4f10b5ef7dbd4ad6a72bc5"
    );

    assert_eq!(ledger.victim_txs.len(), 7);
    assert_eq!(ledger.victim_addrs.len(), 5);
    assert_eq!(ledger.total_wei(), 88 * E / 10);
    assert!(ledger.victim_addrs.len() <= ledger.victim_txs.len());
    // One direct payment (F1) and one foo() drain (F2).
    assert_eq!(ledger.dropped_external, 1);
    assert_eq!(ledger.dropped_signature, 1);
    assert!(ledger.audit.is_empty());
    // The funding-tx fallback covers drains without a trace parent.
    assert!(ledger.victim_txs.iter().any(|v| v.depositor_source == DepositorSource::FundingTx));
}

#[test]
fn scammer_self_deposit_is_set_aside() {
    let (_, ledger) = case_ledger();
    assert_eq!(ledger.scammer_to_scammer_txs.len(), 1);
    let s2s = &ledger.scammer_to_scammer_txs[0];
    assert_eq!(s2s.depositor, Some(a(SCAM2)));
    assert_eq!(s2s.tx.value_wei, E / 100);
    assert_eq!(
        s2s.tx.trace_parent.as_ref().unwrap().as_str(),
        "0x99655e8e5045c39f26002d5e44f30b0789758ae9b4665c9524adcf5ec2fe7231"
    );
    let hashes: BTreeSet<_> = ledger.victim_txs.iter().map(|v| &v.tx.tx_hash).collect();
    assert!(!hashes.contains(&s2s.tx.tx_hash));

    // With only the first address known, the same tx is an ordinary victim tx.
    let store = load_fixture(&fixtures_dir().join("chain/case_study")).unwrap();
    let only = classify_victim_txs(&store, &BTreeSet::from([a(SCAM)]), &catalog(), &Chain::Eth).unwrap();
    assert!(only.scammer_to_scammer_txs.is_empty());
    assert!(only.victim_addrs.contains(&a(SCAM2)));
}

#[test]
fn signature_outside_catalog_is_excluded() {
    let scam = addr(0xff);
    let c = addr(0xc1);
    let mut foo = tx(1, 3, 1, c, scam, E);
    foo.call_signature = Some("foo()".into());
    let store = ChainStore::from_parts(vec![foo], vec![], vec![]).unwrap();
    let l = classify_victim_txs(&store, &BTreeSet::from([scam]), &catalog(), &Chain::Eth).unwrap();
    assert!(l.victim_txs.is_empty());
    assert_eq!(l.dropped_signature, 1);
}

#[test]
fn unknown_depositor_is_kept_and_audited() {
    let scam = addr(0xff);
    let mut drain = tx(1, 3, 1, addr(0xc1), scam, E);
    drain.trace_parent = Some(h(0x99));
    let store = ChainStore::from_parts(vec![drain], vec![], vec![]).unwrap();
    let l = classify_victim_txs(&store, &BTreeSet::from([scam]), &catalog(), &Chain::Eth).unwrap();
    assert_eq!(l.victim_txs.len(), 1);
    assert_eq!(l.victim_txs[0].depositor, None);
    assert!(l.victim_addrs.is_empty());
    assert_eq!(l.audit.len(), 1);
    assert!(l.audit[0].issue.starts_with("MissingTraceParent"));
}

#[test]
fn loss_two_victims_two_prices() {
    let l = ledger_of(&[(1, E / 2), (2, E / 10)], &[0xff]);
    let mut prices = PriceTable::new();
    prices.insert(Chain::Eth, day("2021-03-01"), r("10")).unwrap();
    prices.insert(Chain::Eth, day("2021-03-02"), r("20")).unwrap();
    let report = aggregate_loss(&l, &prices, (day("2021-03-01"), day("2021-03-31"))).unwrap();
    assert_eq!(report.total_wei, 6 * E / 10);
    assert_eq!(report.mean_wei, r("300000000000000000"));
    assert_eq!(report.median_wei, r("300000000000000000"));
    assert_eq!(report.usd_min, r("6"));
    assert_eq!(report.usd_max, r("12"));
    let row = report.row();
    assert_eq!(row.total_amount, "0.6");
    assert_eq!((row.usd_min.as_str(), row.usd_max.as_str()), ("6.00", "12.00"));
    assert!(report.usd_min <= report.usd_max);
}

#[test]
fn loss_of_empty_ledger_is_zero() {
    let l = VictimLedger::empty(Chain::Eth);
    let report = aggregate_loss(&l, &PriceTable::new(), (day("2021-01-01"), day("2021-12-31"))).unwrap();
    assert_eq!(report.total_wei, 0);
    assert_eq!(report.usd_min, r("0"));
    assert_eq!(report.usd_max, r("0"));
}

#[test]
fn loss_with_constant_price_is_a_point() {
    let l = ledger_of(&[(1, 3 * E)], &[0xff]);
    let mut prices = PriceTable::new();
    for d in ["2021-03-01", "2021-03-02", "2021-03-03"] {
        prices.insert(Chain::Eth, day(d), r("1850.25")).unwrap();
    }
    let report = aggregate_loss(&l, &prices, (day("2021-03-01"), day("2021-03-03"))).unwrap();
    assert_eq!(report.usd_min, r("5550.75"));
    assert_eq!(report.usd_min, report.usd_max);
    assert_eq!(report.median_wei, report.mean_wei);
}

#[test]
fn loss_requires_prices_in_period() {
    let l = ledger_of(&[(1, E)], &[0xff]);
    let mut prices = PriceTable::new();
    prices.insert(Chain::Eth, day("2020-01-01"), r("100")).unwrap();
    assert!(aggregate_loss(&l, &prices, (day("2021-03-01"), day("2021-03-03"))).is_err());
}

#[test]
fn median_uses_per_address_totals() {
    // Victim 1 sends twice, so per-address totals are {3, 1, 10}.
    let l = ledger_of(&[(1, E), (1, 2 * E), (2, E), (3, 10 * E)], &[0xff]);
    let mut prices = PriceTable::new();
    prices.insert(Chain::Eth, day("2021-03-01"), r("1")).unwrap();
    let report = aggregate_loss(&l, &prices, (day("2021-03-01"), day("2021-03-01"))).unwrap();
    assert_eq!(report.victims, 3);
    assert_eq!(report.median_wei, r("3000000000000000000"));
    assert_eq!(report.mean_wei, r("14000000000000000000") / r("3"));
}

#[test]
fn overlap_examples() {
    assert_eq!(cross_chain_from_counts(12_790, 13_388, 25_933), Some(245));

    let mut eth = ledger_of(&[(1, E), (2, E)], &[0xff]);
    let mut bsc = ledger_of(&[(3, E), (4, E)], &[0xfe]);
    bsc.chain = Chain::Bsc;
    let o = victim_overlap(&[&eth, &bsc]);
    assert_eq!((o.distinct_total, o.cross_chain_count), (4, 0));

    let mut same = eth.clone();
    same.chain = Chain::Bsc;
    let o = victim_overlap(&[&eth, &same]);
    assert_eq!((o.distinct_total, o.cross_chain_count), (2, 2));

    eth.victim_addrs.insert(addr(3));
    let o = victim_overlap(&[&eth, &bsc]);
    assert_eq!(o.cross_chain_count, 1);
    assert_eq!(o.per_chain[&Chain::Eth], 3);
}

#[test]
fn distribution_examples() {
    let l = ledger_of(&[(1, E), (2, E), (3, E), (3, E)], &[0xff, 0xfe]);
    let (victims, scams) = tx_count_distributions(&l, DEFAULT_VICTIM_BUCKETS, DEFAULT_SCAM_BUCKETS).unwrap();
    let counts: Vec<usize> = victims.rows.iter().map(|r| r.count).collect();
    assert_eq!(counts, vec![2, 1, 0]);
    assert_eq!(victims.percent_labels(), vec!["66.7%", "33.3%", "0.0%"]);
    // 0xfe profited from nothing and still counts.
    let counts: Vec<usize> = scams.rows.iter().map(|r| r.count).collect();
    assert_eq!(counts, vec![1, 1, 0, 0]);

    let empty = VictimLedger::empty(Chain::Eth);
    let (victims, scams) = tx_count_distributions(&empty, DEFAULT_VICTIM_BUCKETS, DEFAULT_SCAM_BUCKETS).unwrap();
    assert_eq!(victims.total, 0);
    assert!(victims.rows.iter().chain(&scams.rows).all(|r| r.count == 0 && r.percent == 0.0));
}

#[test]
fn timeline_examples() {
    let mut l = VictimLedger::empty(Chain::Eth);
    for (i, (month, d, v)) in [(3, 5, E), (3, 20, 2 * E)].into_iter().enumerate() {
        l.victim_txs.push(VictimTx {
            tx: tx(i as u8, month, d, addr(1), addr(0xff), v),
            depositor: Some(addr(9)),
            depositor_source: DepositorSource::TraceParent,
        });
    }
    let rows = monthly_timeline(&l);
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].month.as_str(), rows[0].tx_count, rows[0].total_wei), ("2021-03", 2, 3 * E));

    l.victim_txs[1].tx.block_time = Utc.with_ymd_and_hms(2021, 5, 2, 0, 0, 0).unwrap();
    let months: Vec<(String, usize)> = monthly_timeline(&l).into_iter().map(|r| (r.month, r.tx_count)).collect();
    assert_eq!(
        months,
        vec![("2021-03".into(), 1), ("2021-04".into(), 0), ("2021-05".into(), 1)]
    );
    assert!(monthly_timeline(&VictimLedger::empty(Chain::Eth)).is_empty());
}

#[test]
fn timeline_crosses_year_boundary() {
    let mut l = VictimLedger::empty(Chain::Eth);
    for (i, (y, m)) in [(2022, 11), (2023, 2)].into_iter().enumerate() {
        let mut t = tx(i as u8, 1, 1, addr(1), addr(0xff), E);
        t.block_time = Utc.with_ymd_and_hms(y, m, 1, 0, 0, 0).unwrap();
        l.victim_txs.push(VictimTx { tx: t, depositor: None, depositor_source: DepositorSource::Unknown });
    }
    let months: Vec<String> = monthly_timeline(&l).into_iter().map(|r| r.month).collect();
    assert_eq!(months, ["2022-11", "2022-12", "2023-01", "2023-02"]);
}

#[test]
fn case_study_money_flow() {
    let (store, _) = case_ledger();
    let g = money_flow_graph(&store, &a(SCAM), &Chain::Eth).unwrap();
    let out = g.edge(&a(SCAM), &a(CASHOUT)).unwrap();
    assert_eq!(out.total_wei, 815 * E / 10);
    assert_eq!(out.tx_count, 1);
    // Three 0.1 deposits drained by one contract collapse into one edge.
    let v3 = a("0x252afe9ba4042f0de0aaa1f9c6b63c9caf386689");
    let e = g.edge(&v3, &a(SCAM)).unwrap();
    assert_eq!((e.total_wei, e.tx_count), (3 * E / 10, 3));
    let kind = |x: &Address| g.nodes.iter().find(|n| n.address == *x).unwrap().kind;
    assert_eq!(kind(&a(BOT)), AccountKind::Contract);
    assert_eq!(kind(&a(CASHOUT)), AccountKind::Eoa);
    let dot = g.to_dot("ETH");
    assert!(dot.starts_with("digraph money_flow {"));
    assert!(dot.contains("81.5 ETH (1 tx)"));
}

#[test]
fn isolated_address_flow() {
    let store = ChainStore::from_parts(vec![], vec![], vec![]).unwrap();
    let g = money_flow_graph(&store, &addr(7), &Chain::Eth).unwrap();
    assert_eq!(g.nodes.len(), 1);
    assert!(g.edges.is_empty());
}
