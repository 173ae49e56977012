mod common;

use std::collections::BTreeSet;
use std::fs;

use chrono::{TimeZone, Utc};
use scamlens_core::chain::{
    expand_addresses, load_fixture, AccountKind, AccountRecord, Chain, ChainError, ChainQuery,
    ChainStore, ChainTx, DeployedContract, ExpansionDecision, ExplorerClient, Transport,
    TransportError, TxHash, TxKind, TxRecord,
};
use scamlens_core::deobfuscate::SignatureCatalog;
use scamlens_core::synth::{generate_world, WorldOptions};
use scamlens_core::Address;

use common::{contract_fixture, fixtures_dir};

const SCAM: &str = "0x2c1b6D43A52ea97d61979C22B7aa7B83352c1a2d";
const SCAM2: &str = "0xCdf8BFE2C60B97b3fe47ac74b3FCaE89aC2A450a";
const BOT: &str = "0x661ee2114cca369e51e41179892ee2d3ef76eb1b";
const BAIT: &str = "0xaF3bCbEe2A0a4709F649d43159062B5567D2B8ec";
const CASHOUT: &str = "0xE0876eC5fdcB4a3017C8EAf655C6D2aBFcF0C506";
const LOOKALIKE: &str = "0x3c1a458adf7376a8b84e3c8ce352d43b1bcc9854";

fn a(text: &str) -> Address {
    text.parse().unwrap()
}

fn h(n: u8) -> TxHash {
    format!("0x{}", format!("{n:02x}").repeat(32)).parse().unwrap()
}

fn three_tx() -> ChainStore {
    load_fixture(&fixtures_dir().join("chain/three_tx")).unwrap()
}

fn case_study() -> ChainStore {
    load_fixture(&fixtures_dir().join("chain/case_study")).unwrap()
}

fn start_catalog() -> SignatureCatalog {
    [("start()".to_string(), 1)].into_iter().collect()
}

fn internal(hash: u8, day: u32, from: Address, to: Address, value: u128, sig: &str) -> ChainTx {
    ChainTx {
        tx_hash: h(hash),
        chain: Chain::Eth,
        block_time: Utc.with_ymd_and_hms(2023, 5, day, 12, 0, 0).unwrap(),
        from,
        to,
        value_wei: value,
        kind: TxKind::Internal,
        call_signature: Some(sig.to_string()),
        trace_parent: None,
    }
}

fn deployed(address: Address, fixture: &str) -> DeployedContract {
    DeployedContract {
        address,
        chain: Chain::Eth,
        creator: None,
        creation_tx: None,
        source: Some(contract_fixture(fixture)),
    }
}

#[test]
fn three_tx_fixture_answers_every_endpoint() {
    let store = three_tx();
    assert_eq!(store.len(), 3);
    let mut slots = 0;
    for tx in store.txs() {
        for end in [tx.from, tx.to] {
            let hist = store.tx_history(&end, &Chain::Eth).unwrap();
            assert!(hist.iter().any(|t| t.tx_hash == tx.tx_hash));
            slots += 1;
        }
    }
    assert_eq!(slots, 6);

    let scam = a("0x00000000000000000000000000000000000000ff");
    let hist = store.tx_history(&scam, &Chain::Eth).unwrap();
    assert_eq!(hist.len(), 2);
    assert!(hist.iter().all(|t| t.kind == TxKind::Internal && t.to == scam));

    // c1 is both receiver and sender; each tx is listed once.
    let c1 = a("0x00000000000000000000000000000000000000c1");
    let hashes: Vec<_> = store.tx_history(&c1, &Chain::Eth).unwrap().into_iter().map(|t| t.tx_hash).collect();
    assert_eq!(hashes, vec![h(0x11), h(0x22)]);

    assert!(store.tx_history(&a("0x00000000000000000000000000000000000000ee"), &Chain::Eth).unwrap().is_empty());
    assert!(store.tx_history(&scam, &Chain::Bsc).unwrap().is_empty());

    assert_eq!(store.kind_of(&a("0x00000000000000000000000000000000000000a1"), &Chain::Eth), AccountKind::Eoa);
    assert_eq!(store.kind_of(&c1, &Chain::Eth), AccountKind::Contract);
    assert_eq!(store.kind_of(&scam, &Chain::Eth), AccountKind::Unknown);
}

#[test]
fn empty_fixture_is_empty_store() {
    let store = load_fixture(&fixtures_dir().join("chain/empty")).unwrap();
    assert!(store.is_empty());
    assert!(store.contracts(&Chain::Eth).unwrap().is_empty());
}

#[test]
fn repeated_hash_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let line = fs::read_to_string(fixtures_dir().join("chain/three_tx/txs.jsonl")).unwrap();
    let first = line.lines().next().unwrap();
    fs::write(dir.path().join("txs.jsonl"), format!("{first}\n{first}\n")).unwrap();
    match load_fixture(dir.path()) {
        Err(ChainError::DuplicateTx(hash)) => assert_eq!(hash, h(0x11)),
        other => panic!("expected DuplicateTx, got {other:?}"),
    }
}

#[test]
fn format_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let good = fs::read_to_string(fixtures_dir().join("chain/three_tx/txs.jsonl")).unwrap();
    let first = good.lines().next().unwrap();
    let cases = [
        "{not json",
        &first.replace("\"1000000000000000000\"", "\"-5\""),
        &first.replace("\"kind\"", "\"extra\": 1, \"kind\""),
        &first.replace("0x00000000000000000000000000000000000000a1", "0x123"),
    ];
    for bad in cases {
        fs::write(dir.path().join("txs.jsonl"), format!("\n{bad}\n")).unwrap();
        match load_fixture(dir.path()) {
            Err(ChainError::Format { line, .. }) => assert_eq!(line, 2, "{bad}"),
            other => panic!("expected format error for {bad}, got {other:?}"),
        }
    }
}

#[test]
fn contradictory_account_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixtures_dir().join("chain/three_tx/txs.jsonl"), dir.path().join("txs.jsonl")).unwrap();
    fs::write(
        dir.path().join("accounts.jsonl"),
        "{\"address\": \"0x00000000000000000000000000000000000000c1\", \"kind\": \"eoa\"}\n",
    )
    .unwrap();
    assert!(matches!(load_fixture(dir.path()), Err(ChainError::Inconsistent(_))));
}

#[test]
fn history_order_is_time_then_hash() {
    let x = a("0x0000000000000000000000000000000000000001");
    let y = a("0x0000000000000000000000000000000000000002");
    let txs = vec![
        internal(9, 3, x, y, 1, "start()"),
        internal(3, 3, x, y, 1, "start()"),
        internal(7, 1, y, x, 1, "start()"),
        internal(5, 3, x, y, 1, "start()"),
    ];
    let mut reversed = txs.clone();
    reversed.reverse();
    let s1 = ChainStore::from_parts(txs, vec![], vec![]).unwrap();
    let s2 = ChainStore::from_parts(reversed, vec![], vec![]).unwrap();
    let order: Vec<_> = s1.tx_history(&x, &Chain::Eth).unwrap().into_iter().map(|t| t.tx_hash).collect();
    assert_eq!(order, vec![h(7), h(3), h(5), h(9)]);
    assert_eq!(s1.tx_history(&x, &Chain::Eth).unwrap(), s2.tx_history(&x, &Chain::Eth).unwrap());
}

#[test]
fn case_study_draining_contracts() {
    let store = case_study();
    let draining: Vec<Address> = store
        .contracts_draining_to(&a(SCAM), &Chain::Eth)
        .unwrap()
        .into_iter()
        .map(|c| c.address)
        .collect();
    assert!(draining.contains(&a(BOT)));
    assert!(draining.contains(&a(BAIT)));
    let bot = store.get_contract(&a(BOT), &Chain::Eth).unwrap();
    assert_eq!(bot.creator, Some(a("0xf91a0f615113ccbc85aa47e9a7ded4b3652316e4")));
    assert!(bot.source.as_deref().unwrap().contains("getMempoolLong"));

    // Receives only external transfers.
    assert!(store.contracts_draining_to(&a(CASHOUT), &Chain::Eth).unwrap().is_empty());

    let out = store
        .tx_history(&a(SCAM), &Chain::Eth)
        .unwrap()
        .into_iter()
        .find(|t| t.to == a(CASHOUT) && t.value_wei == 81_500_000_000_000_000_000)
        .unwrap();
    assert_eq!(out.tx_hash.as_str(), "0xcc5a8f2cfb2539077c441a5bfdcc3d9222d4da7a7482998672dd6ec3ecde9aa9");
}

#[test]
fn two_contracts_draining_to_one_address() {
    let store = three_tx();
    let got: Vec<Address> = store
        .contracts_draining_to(&a("0x00000000000000000000000000000000000000ff"), &Chain::Eth)
        .unwrap()
        .into_iter()
        .map(|c| c.address)
        .collect();
    assert_eq!(
        got,
        vec![
            a("0x00000000000000000000000000000000000000c1"),
            a("0x00000000000000000000000000000000000000c2")
        ]
    );
}

/// One seed, its victim contract, and a look-alike paying the address hidden
/// in its own fragments.
fn lookalike_store(extra: Vec<ChainTx>) -> (ChainStore, Address, Address, Address) {
    let seed = a(SCAM);
    let victim = a("0x00000000000000000000000000000000000000b1");
    let similar = a("0x00000000000000000000000000000000000000b2");
    let mut txs = vec![
        internal(1, 2, victim, seed, 2_000_000_000_000_000_000, "start()"),
        internal(2, 4, similar, a(LOOKALIKE), 300_000_000_000_000_000, "start()"),
    ];
    txs.extend(extra);
    let contracts = vec![deployed(victim, "lookalike_a.sol"), deployed(similar, "lookalike_b.sol")];
    (ChainStore::from_parts(txs, vec![], contracts).unwrap(), seed, victim, similar)
}

#[test]
fn expansion_finds_the_look_alike_recipient() {
    let (store, seed, victim, similar) = lookalike_store(vec![]);
    let seeds = BTreeSet::from([seed]);
    let report = expand_addresses(&store, &Chain::Eth, &seeds, &[], &start_catalog()).unwrap();
    assert_eq!(report.new_addresses, BTreeSet::from([a(LOOKALIKE)]));
    assert_eq!(report.victim_contracts, BTreeSet::from([victim, similar]));
    assert!(!report.capped);
    let accepted: Vec<_> = report.accepted_for(&a(LOOKALIKE)).collect();
    assert_eq!(accepted, vec![similar.to_lower_hex()]);
}

#[test]
fn two_recipients_are_rejected() {
    let similar = a("0x00000000000000000000000000000000000000b2");
    let other = a("0x00000000000000000000000000000000000000d9");
    let (store, seed, _, _) = lookalike_store(vec![internal(3, 5, similar, other, 5, "start()")]);
    let report = expand_addresses(&store, &Chain::Eth, &BTreeSet::from([seed]), &[], &start_catalog()).unwrap();
    assert!(report.new_addresses.is_empty());
    let entry = report.audit.iter().find(|e| e.candidate == similar.to_lower_hex()).unwrap();
    assert!(matches!(
        &entry.decision,
        ExpansionDecision::MultipleRecipients { recipients } if recipients.len() == 2
    ));
}

#[test]
fn zero_value_flows_do_not_count_as_recipients() {
    let similar = a("0x00000000000000000000000000000000000000b2");
    let other = a("0x00000000000000000000000000000000000000d9");
    let (store, seed, _, _) = lookalike_store(vec![internal(3, 5, similar, other, 0, "start()")]);
    let report = expand_addresses(&store, &Chain::Eth, &BTreeSet::from([seed]), &[], &start_catalog()).unwrap();
    assert_eq!(report.new_addresses, BTreeSet::from([a(LOOKALIKE)]));
}

#[test]
fn signature_outside_catalog_is_rejected() {
    let (store, seed, _, similar) = lookalike_store(vec![]);
    let catalog: SignatureCatalog = [("withdrawal()".to_string(), 1)].into_iter().collect();
    let report = expand_addresses(&store, &Chain::Eth, &BTreeSet::from([seed]), &[], &catalog).unwrap();
    assert!(report.new_addresses.is_empty());
    let entry = report.audit.iter().find(|e| e.candidate == similar.to_lower_hex()).unwrap();
    assert_eq!(
        entry.decision,
        ExpansionDecision::SignatureNotInCatalog { signature: Some("start()".into()) }
    );
}

#[test]
fn seeds_without_victims_expand_to_nothing() {
    let (store, _, _, _) = lookalike_store(vec![]);
    let lonely = BTreeSet::from([a("0x00000000000000000000000000000000000000ee")]);
    let report = expand_addresses(&store, &Chain::Eth, &lonely, &[], &start_catalog()).unwrap();
    assert!(report.new_addresses.is_empty());
    assert!(report.victim_contracts.is_empty());
    assert!(report.audit.is_empty());
    let none = expand_addresses(&store, &Chain::Eth, &BTreeSet::new(), &[], &start_catalog()).unwrap();
    assert_eq!(none.rounds, 0);
}

#[test]
fn case_study_expansion() {
    let store = case_study();
    let report =
        expand_addresses(&store, &Chain::Eth, &BTreeSet::from([a(SCAM)]), &[], &start_catalog()).unwrap();
    assert_eq!(report.new_addresses, BTreeSet::from([a(LOOKALIKE), a(SCAM2)]));
    assert!(report.victim_contracts.contains(&a(BOT)));
    // The unverified contract paying through foo() is audited as skipped.
    assert!(report
        .audit
        .iter()
        .any(|e| e.decision == ExpansionDecision::SkippedNoSource));
}

#[test]
fn fixture_round_trip() {
    let store = case_study();
    let dir = tempfile::tempdir().unwrap();
    store.save_fixture(dir.path()).unwrap();
    let again = load_fixture(dir.path()).unwrap();
    assert_eq!(store.txs(), again.txs());
    assert_eq!(store.contracts(&Chain::Eth).unwrap(), again.contracts(&Chain::Eth).unwrap());
    for addr in store.addresses(&Chain::Eth) {
        assert_eq!(store.kind_of(&addr, &Chain::Eth), again.kind_of(&addr, &Chain::Eth));
    }
}

/// Serves explorer endpoints from a store, as a remote service would.
struct StoreTransport(ChainStore);

impl Transport for StoreTransport {
    fn get(&self, endpoint: &str, params: &[(&str, String)]) -> Result<String, TransportError> {
        let param = |k: &str| params.iter().find(|(n, _)| *n == k).map(|(_, v)| v.clone()).unwrap();
        let record = |c: DeployedContract| AccountRecord {
            address: c.address,
            kind: AccountKind::Contract,
            chain: Some(c.chain),
            creator: c.creator,
            creation_tx: c.creation_tx,
            source_path: None,
            source: c.source,
        };
        let lines: Vec<String> = match endpoint {
            "txlist" => {
                let chain: Chain = param("chain").parse().unwrap();
                let addr: Address = param("address").parse().unwrap();
                // Reversed on purpose; the client must restore the order.
                self.0
                    .history(&addr, &chain)
                    .rev()
                    .map(|t| serde_json::to_string(&TxRecord::from(t)).unwrap())
                    .collect()
            }
            "tx" => self
                .0
                .get_tx(&param("hash").parse().unwrap())
                .map(|t| serde_json::to_string(&TxRecord::from(t)).unwrap())
                .into_iter()
                .collect(),
            "account" => {
                let chain: Chain = param("chain").parse().unwrap();
                let addr: Address = param("address").parse().unwrap();
                match self.0.get_contract(&addr, &chain) {
                    Some(c) => vec![serde_json::to_string(&record(c.clone())).unwrap()],
                    None => vec![],
                }
            }
            "contracts" => {
                let chain: Chain = param("chain").parse().unwrap();
                self.0
                    .contracts(&chain)
                    .unwrap()
                    .into_iter()
                    .map(|c| serde_json::to_string(&record(c)).unwrap())
                    .collect()
            }
            other => {
                return Err(TransportError {
                    endpoint: other.into(),
                    message: "unknown endpoint".into(),
                })
            }
        };
        Ok(lines.join("\n"))
    }
}

#[test]
fn explorer_client_matches_store() {
    let store = case_study();
    let client = ExplorerClient::new(StoreTransport(store.clone()));
    for addr in store.addresses(&Chain::Eth) {
        assert_eq!(
            client.tx_history(&addr, &Chain::Eth).unwrap(),
            store.tx_history(&addr, &Chain::Eth).unwrap()
        );
    }
    let hash: TxHash = "0x2ccab130cd98699989f10003723fb39a7c4c20dd46a1744652ec3415d14453eb".parse().unwrap();
    assert_eq!(client.tx(&hash).unwrap(), store.tx(&hash).unwrap());
    let seeds = BTreeSet::from([a(SCAM)]);
    let via_client = expand_addresses(&client, &Chain::Eth, &seeds, &[], &start_catalog()).unwrap();
    let via_store = expand_addresses(&store, &Chain::Eth, &seeds, &[], &start_catalog()).unwrap();
    assert_eq!(via_client, via_store);
}

#[test]
fn synthetic_world_expansion_recovers_hidden_addresses() {
    for seed in 0..4 {
        let world = generate_world(seed, &WorldOptions::default());
        assert!(world.store.len() <= 1_000);
        let report = expand_addresses(&world.store, &world.chain, &world.seeds, &[], &world.catalog).unwrap();
        assert_eq!(report.new_addresses, world.hidden, "seed {seed}");
        assert_eq!(report.victim_contracts, world.victim_contracts, "seed {seed}");
        assert!(report.new_addresses.is_disjoint(&world.decoy_recipients));
        assert!(report.rounds >= 2);
        let rejected: BTreeSet<&str> = report
            .audit
            .iter()
            .filter_map(|e| match e.decision {
                ExpansionDecision::MultipleRecipients { .. } => Some("multiple"),
                ExpansionDecision::SignatureNotInCatalog { .. } => Some("catalog"),
                _ => None,
            })
            .collect();
        assert_eq!(rejected, BTreeSet::from(["catalog", "multiple"]), "seed {seed}");
    }
}
