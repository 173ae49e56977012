use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::contracts::{generate_contract, random_address, random_subset_contract, SynthOptions, Trick};
use crate::address::Address;
use crate::chain::{AccountKind, Chain, ChainStore, ChainTx, DeployedContract, TxHash, TxKind};
use crate::deobfuscate::{harvest_sink_signatures, SignatureCatalog};
use crate::solidity::parse_source;

const MILLI: u128 = 1_000_000_000_000_000;

#[derive(Debug, Clone)]
pub struct WorldOptions {
    /// Independent scam groups, each with its own seed address.
    pub groups: usize,
    /// Scam addresses per group; all but the first are hidden.
    pub chain_length: usize,
    /// Victim contracts per (address, template) pair.
    pub contracts_per_address: usize,
    pub decoys: bool,
    pub chain: Chain,
}

impl Default for WorldOptions {
    fn default() -> Self {
        WorldOptions {
            groups: 2,
            chain_length: 3,
            contracts_per_address: 2,
            decoys: true,
            chain: Chain::Eth,
        }
    }
}

/// A generated chain fixture together with the facts it was built from.
#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub chain: Chain,
    pub store: ChainStore,
    pub seeds: BTreeSet<Address>,
    /// Scam addresses reachable only through expansion.
    pub hidden: BTreeSet<Address>,
    /// Contracts with at least one internal transfer to a scam address.
    pub victim_contracts: BTreeSet<Address>,
    /// Recipients of look-alike contracts that must never be accepted.
    pub decoy_recipients: BTreeSet<Address>,
    /// Non-scam EOAs that funded a contract draining to a scam address.
    pub victims: BTreeSet<Address>,
    /// Scam addresses that funded bait contracts of another scam address.
    pub self_depositors: BTreeSet<Address>,
    pub catalog: SignatureCatalog,
}

impl SynthWorld {
    pub fn scam_addresses(&self) -> BTreeSet<Address> {
        self.seeds.union(&self.hidden).copied().collect()
    }
}

struct Builder {
    rng: ChaCha8Rng,
    chain: Chain,
    now: DateTime<Utc>,
    txs: Vec<ChainTx>,
    contracts: Vec<DeployedContract>,
    eoas: Vec<Address>,
}

impl Builder {
    fn hash(&mut self) -> TxHash {
        let bytes: [u8; 32] = self.rng.gen();
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        format!("0x{hex}").parse().expect("generated hash is valid")
    }

    fn tick(&mut self) -> DateTime<Utc> {
        self.now += Duration::seconds(self.rng.gen_range(30..86_400));
        self.now
    }

    fn eoa(&mut self) -> Address {
        let a = random_address(&mut self.rng);
        self.eoas.push(a);
        a
    }

    fn tx(
        &mut self,
        from: Address,
        to: Address,
        value_wei: u128,
        kind: TxKind,
        call_signature: Option<&str>,
        trace_parent: Option<TxHash>,
    ) -> TxHash {
        let tx_hash = self.hash();
        let block_time = match kind {
            TxKind::Internal => self.now,
            TxKind::External => self.tick(),
        };
        self.txs.push(ChainTx {
            tx_hash: tx_hash.clone(),
            chain: self.chain.clone(),
            block_time,
            from,
            to,
            value_wei,
            kind,
            call_signature: call_signature.map(str::to_string),
            trace_parent,
        });
        tx_hash
    }

    /// Deploys a contract from `owner`, funds it and calls `signature`,
    /// producing one internal transfer per `(recipient, value)` pair.
    fn bot(
        &mut self,
        owner: Address,
        source: Option<String>,
        deposit: u128,
        signature: &str,
        drains: &[(Address, u128)],
    ) -> Address {
        let address = random_address(&mut self.rng);
        let creation = self.tx(owner, address, 0, TxKind::External, None, None);
        self.contracts.push(DeployedContract {
            address,
            chain: self.chain.clone(),
            creator: Some(owner),
            creation_tx: Some(creation),
            source,
        });
        self.tx(owner, address, deposit, TxKind::External, None, None);
        let call = self.tx(owner, address, 0, TxKind::External, Some(signature), None);
        // Some explorers omit the parent link; victims fall back to the funding tx.
        let parent = self.rng.gen_bool(0.8).then_some(call);
        for &(to, value) in drains {
            self.tx(address, to, value, TxKind::Internal, Some(signature), parent.clone());
        }
        address
    }

    fn deposit(&mut self, floor: Option<u128>) -> u128 {
        let v = self.rng.gen_range(50..3_000) * MILLI;
        match floor {
            Some(t) if v <= t => t + self.rng.gen_range(1..500) * MILLI,
            _ => v,
        }
    }
}

/// Builds a chain fixture of scam groups linked through shared contract
/// templates. In each group, address `j` uses templates `j - 1` and `j`, so
/// expansion from the seed needs `chain_length - 1` rounds.
pub fn generate_world(seed: u64, options: &WorldOptions) -> SynthWorld {
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        chain: options.chain.clone(),
        now: Utc.with_ymd_and_hms(2023, 3, 1, 0, 0, 0).unwrap(),
        txs: Vec::new(),
        contracts: Vec::new(),
        eoas: Vec::new(),
    };
    let synth = SynthOptions {
        trick: Some(Trick::Fragments),
        ..SynthOptions::default()
    };

    let mut seeds = BTreeSet::new();
    let mut hidden = BTreeSet::new();
    let mut victim_contracts = BTreeSet::new();
    let mut decoy_recipients = BTreeSet::new();
    let mut victims = BTreeSet::new();
    let mut self_depositors = BTreeSet::new();
    let mut templates = Vec::new();
    let mut decoy_template = None;

    for _ in 0..options.groups {
        let length = options.chain_length.max(1);
        let family: Vec<u64> = (0..length).map(|_| b.rng.gen()).collect();
        let scams: Vec<Address> = (0..length).map(|_| b.eoa()).collect();
        seeds.insert(scams[0]);
        decoy_template.get_or_insert(family[0]);
        hidden.extend(scams[1..].iter().copied());

        for (j, &scam) in scams.iter().enumerate() {
            let uses: Vec<u64> = if j == 0 { vec![family[0]] } else { vec![family[j - 1], family[j]] };
            for structure in uses {
                for _ in 0..options.contracts_per_address.max(1) {
                    let generated = generate_contract(structure, scam, &synth);
                    templates.push(generated.source.clone());
                    // Occasionally the same victim falls for a second bot.
                    let owner = match victims.iter().next() {
                        Some(&v) if b.rng.gen_bool(0.15) => v,
                        _ => b.eoa(),
                    };
                    victims.insert(owner);
                    let value = b.deposit(generated.threshold_wei);
                    let mut drains = vec![(scam, value)];
                    if b.rng.gen_bool(0.2) {
                        // zero-value decoy transfer to a throwaway address
                        let z = random_address(&mut b.rng);
                        drains.insert(0, (z, 0));
                    }
                    let c = b.bot(owner, Some(generated.source), value, "start()", &drains);
                    victim_contracts.insert(c);
                }
            }
            // Cash-out to a fresh EOA.
            let out = b.eoa();
            let amount = b.rng.gen_range(100..5_000) * MILLI;
            b.tx(scam, out, amount, TxKind::External, None, None);
        }

        // A scam address funding a bait contract that pays another one.
        if scams.len() >= 2 {
            let bait = generate_contract(family[0], scams[1], &synth);
            let c = b.bot(scams[0], Some(bait.source), 10 * MILLI, "start()", &[(scams[1], 10 * MILLI)]);
            victim_contracts.insert(c);
            self_depositors.insert(scams[0]);
        }
    }

    if options.decoys && !seeds.is_empty() {
        let target = *seeds.iter().next().unwrap();
        // Look-alikes built from a real template.
        let template_seed = decoy_template.expect("at least one group");
        let (r1, r2, r3, r4, r5) = (b.eoa(), b.eoa(), b.eoa(), b.eoa(), b.eoa());
        decoy_recipients.extend([r1, r2, r3, r4, r5]);

        let two = generate_contract(template_seed, r1, &synth);
        let owner = b.eoa();
        let v = b.deposit(two.threshold_wei);
        b.bot(owner, Some(two.source), v, "start()", &[(r1, v / 2), (r2, v - v / 2)]);

        let off_catalog = generate_contract(template_seed, r3, &synth);
        let owner = b.eoa();
        let v = b.deposit(off_catalog.threshold_wei);
        b.bot(owner, Some(off_catalog.source), v, "withdraw()", &[(r3, v)]);

        // Unrelated code draining through a catalogued name.
        let unrelated = random_subset_contract(&mut b.rng);
        let owner = b.eoa();
        let v = b.deposit(None);
        b.bot(owner, Some(unrelated), v, "start()", &[(r4, v)]);

        // Unverified contracts: one pays a fresh address, one pays a seed
        // through a function outside the catalog.
        let owner = b.eoa();
        let v = b.deposit(None);
        b.bot(owner, None, v, "start()", &[(r5, v)]);
        let owner = b.eoa();
        let v = b.deposit(None);
        let c = b.bot(owner, None, v, "foo()", &[(target, v)]);
        victim_contracts.insert(c);

        // Direct payments to a scam address.
        let payer = b.eoa();
        b.tx(payer, target, 20 * MILLI, TxKind::External, None, None);
    }

    let units: Vec<_> = templates.iter().filter_map(|s| parse_source(s).ok()).collect();
    let catalog = harvest_sink_signatures(&units);
    let accounts = b
        .eoas
        .iter()
        .map(|a| (options.chain.clone(), *a, AccountKind::Eoa))
        .collect();
    let store = ChainStore::from_parts(b.txs, accounts, b.contracts).expect("generated world is consistent");

    SynthWorld {
        chain: options.chain.clone(),
        store,
        seeds,
        hidden,
        victim_contracts,
        decoy_recipients,
        victims,
        self_depositors,
        catalog,
    }
}
