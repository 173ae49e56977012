//! Grouping scam addresses into entities by shared transactions, contract
//! URLs, uploader accounts and video titles.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::chain::{Chain, ChainError, ChainQuery};
use crate::victims::VictimLedger;

const WEI_PER_COIN: f64 = 1e18;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScamProfile {
    pub address: Address,
    #[serde(default)]
    pub chains: BTreeSet<Chain>,
    #[serde(default)]
    pub contract_urls: BTreeSet<String>,
    #[serde(default)]
    pub accounts: BTreeSet<String>,
    #[serde(default)]
    pub video_titles: BTreeSet<String>,
    #[serde(default)]
    pub counterparty_scam_addrs: BTreeSet<Address>,
}

impl ScamProfile {
    pub fn new(address: Address) -> Self {
        ScamProfile {
            address,
            ..ScamProfile::default()
        }
    }

    fn merge(&mut self, other: &ScamProfile) {
        self.chains.extend(other.chains.iter().cloned());
        self.contract_urls.extend(other.contract_urls.iter().cloned());
        self.accounts.extend(other.accounts.iter().cloned());
        self.video_titles.extend(other.video_titles.iter().cloned());
        self.counterparty_scam_addrs.extend(&other.counterparty_scam_addrs);
    }
}

/// Collects profile attributes address by address.
#[derive(Debug, Clone, Default)]
pub struct ProfileBuilder {
    profiles: BTreeMap<Address, ScamProfile>,
}

impl ProfileBuilder {
    pub fn new() -> Self {
        ProfileBuilder::default()
    }

    pub fn entry(&mut self, address: Address) -> &mut ScamProfile {
        self.profiles
            .entry(address)
            .or_insert_with(|| ScamProfile::new(address))
    }

    pub fn add_url(&mut self, address: Address, url: &str) {
        self.entry(address).contract_urls.insert(url.to_string());
    }

    pub fn add_video(&mut self, address: Address, account: &str, title: &str) {
        let p = self.entry(address);
        if !account.is_empty() {
            p.accounts.insert(account.to_string());
        }
        if !title.is_empty() {
            p.video_titles.insert(title.to_string());
        }
    }

    /// Records a transaction between two scam addresses, in both profiles.
    pub fn add_counterparty(&mut self, a: Address, b: Address) {
        if a != b {
            self.entry(a).counterparty_scam_addrs.insert(b);
            self.entry(b).counterparty_scam_addrs.insert(a);
        }
    }

    pub fn build(self) -> Vec<ScamProfile> {
        self.profiles.into_values().collect()
    }
}

/// Pairs of scam addresses that transacted with each other: directly, or
/// through a bait contract one of them funded for the other.
pub fn scam_counterparties<Q: ChainQuery + ?Sized>(
    query: &Q,
    ledger: &VictimLedger,
) -> Result<BTreeSet<(Address, Address)>, ChainError> {
    let scams = &ledger.scam_addresses;
    let mut pairs = BTreeSet::new();
    let mut add = |x: Address, y: Address| {
        if x != y {
            pairs.insert((x.min(y), x.max(y)));
        }
    };
    for s in scams {
        for tx in query.tx_history(s, &ledger.chain)? {
            let other = if tx.from == *s { tx.to } else { tx.from };
            if scams.contains(&other) {
                add(*s, other);
            }
        }
    }
    for v in &ledger.scammer_to_scammer_txs {
        if let Some(d) = v.depositor {
            add(d, v.tx.to);
        }
    }
    Ok(pairs)
}

/// Canonical title: letters and digits only, lowercased. Emoji, symbols,
/// punctuation and whitespace are removed, including keycap sequences.
pub fn normalize_title(title: &str) -> String {
    let chars: Vec<char> = title.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let keycap = match (chars.get(i + 1), chars.get(i + 2)) {
            (Some('\u{20E3}'), _) => true,
            (Some('\u{FE0F}'), Some('\u{20E3}')) => true,
            _ => false,
        };
        if c.is_alphanumeric() && !keycap {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScamCluster {
    /// 1-based, assigned in order of each cluster's smallest member.
    pub id: usize,
    pub members: BTreeSet<Address>,
    pub urls: BTreeSet<String>,
    pub videos: BTreeSet<String>,
    pub accounts: BTreeSet<String>,
    pub profit_wei: BTreeMap<Chain, u128>,
    /// Profit per member, summed over chains (used for the representative).
    #[serde(skip)]
    pub member_profit_wei: BTreeMap<Address, u128>,
    /// Number of members using each account.
    #[serde(skip)]
    pub account_frequency: BTreeMap<String, usize>,
}

impl ScamCluster {
    pub fn profit_on(&self, chain: &Chain) -> u128 {
        self.profit_wei.get(chain).copied().unwrap_or(0)
    }

    /// Sum of coin amounts over all chains.
    pub fn combined_profit_wei(&self) -> u128 {
        self.profit_wei.values().sum()
    }

    pub fn representative_address(&self) -> Address {
        *self
            .members
            .iter()
            .max_by(|a, b| {
                let pa = self.member_profit_wei.get(a).copied().unwrap_or(0);
                let pb = self.member_profit_wei.get(b).copied().unwrap_or(0);
                pa.cmp(&pb).then_with(|| b.cmp(a))
            })
            .expect("clusters are non-empty")
    }

    pub fn representative_account(&self) -> Option<&str> {
        self.account_frequency
            .iter()
            .max_by(|(na, ca), (nb, cb)| ca.cmp(cb).then_with(|| nb.cmp(na)))
            .map(|(n, _)| n.as_str())
    }
}

/// Dataset-wide totals used for percentage columns.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UniverseTotals {
    pub addresses: usize,
    pub urls: usize,
    pub videos: usize,
    pub accounts: usize,
    pub profit_wei: BTreeMap<Chain, u128>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterReport {
    pub clusters: Vec<ScamCluster>,
    pub singletons: BTreeSet<Address>,
    pub totals: UniverseTotals,
}

/// Which criterion joined two profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Linkage {
    Transaction,
    ContractUrl,
    Account,
    Title,
}

fn merged_profiles(profiles: &[ScamProfile]) -> Vec<ScamProfile> {
    let mut by_addr: BTreeMap<Address, ScamProfile> = BTreeMap::new();
    for p in profiles {
        by_addr
            .entry(p.address)
            .and_modify(|q| q.merge(p))
            .or_insert_with(|| p.clone());
    }
    by_addr.into_values().collect()
}

/// Direct pairwise test, without transitivity.
pub fn linked(a: &ScamProfile, b: &ScamProfile) -> Option<Linkage> {
    if a.counterparty_scam_addrs.contains(&b.address) || b.counterparty_scam_addrs.contains(&a.address) {
        return Some(Linkage::Transaction);
    }
    if !a.contract_urls.is_disjoint(&b.contract_urls) {
        return Some(Linkage::ContractUrl);
    }
    if !a.accounts.is_disjoint(&b.accounts) {
        return Some(Linkage::Account);
    }
    let titles = |p: &ScamProfile| -> BTreeSet<String> {
        p.video_titles.iter().map(|t| normalize_title(t)).filter(|t| !t.is_empty()).collect()
    };
    if !titles(a).is_disjoint(&titles(b)) {
        return Some(Linkage::Title);
    }
    None
}

/// Union-find over the four linkage criteria. Profiles for the same address
/// are merged first; profits come from the ledgers' victim transactions.
pub fn build_clusters(profiles: &[ScamProfile], ledgers: &[VictimLedger]) -> ClusterReport {
    let profiles = merged_profiles(profiles);
    let index: HashMap<Address, usize> = profiles.iter().enumerate().map(|(i, p)| (p.address, i)).collect();
    let mut uf = UnionFind::new(profiles.len());

    for (i, p) in profiles.iter().enumerate() {
        for c in &p.counterparty_scam_addrs {
            if let Some(&j) = index.get(c) {
                uf.union(i, j);
            }
        }
    }
    let mut join_on = |keys: &mut dyn Iterator<Item = (String, usize)>| {
        let mut first: HashMap<String, usize> = HashMap::new();
        for (k, i) in keys {
            match first.get(&k) {
                Some(&j) => {
                    uf.union(i, j);
                }
                None => {
                    first.insert(k, i);
                }
            }
        }
    };
    join_on(&mut profiles.iter().enumerate().flat_map(|(i, p)| p.contract_urls.iter().map(move |u| (u.clone(), i))));
    join_on(&mut profiles.iter().enumerate().flat_map(|(i, p)| p.accounts.iter().map(move |u| (u.clone(), i))));
    join_on(&mut profiles.iter().enumerate().flat_map(|(i, p)| {
        p.video_titles
            .iter()
            .map(|t| normalize_title(t))
            .filter(|t| !t.is_empty())
            .map(move |t| (t, i))
    }));

    let mut profit: BTreeMap<Address, BTreeMap<Chain, u128>> = BTreeMap::new();
    let mut totals = UniverseTotals::default();
    for l in ledgers {
        for v in &l.victim_txs {
            if index.contains_key(&v.tx.to) {
                *profit.entry(v.tx.to).or_default().entry(l.chain.clone()).or_default() += v.tx.value_wei;
                *totals.profit_wei.entry(l.chain.clone()).or_default() += v.tx.value_wei;
            }
        }
    }
    totals.addresses = profiles.len();
    totals.urls = profiles.iter().flat_map(|p| &p.contract_urls).collect::<BTreeSet<_>>().len();
    totals.videos = profiles.iter().flat_map(|p| &p.video_titles).collect::<BTreeSet<_>>().len();
    totals.accounts = profiles.iter().flat_map(|p| &p.accounts).collect::<BTreeSet<_>>().len();

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..profiles.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut singletons = BTreeSet::new();
    let mut clusters: Vec<ScamCluster> = Vec::new();
    for members in groups.into_values() {
        if members.len() == 1 {
            singletons.insert(profiles[members[0]].address);
            continue;
        }
        let mut c = ScamCluster {
            id: 0,
            members: BTreeSet::new(),
            urls: BTreeSet::new(),
            videos: BTreeSet::new(),
            accounts: BTreeSet::new(),
            profit_wei: BTreeMap::new(),
            member_profit_wei: BTreeMap::new(),
            account_frequency: BTreeMap::new(),
        };
        for i in members {
            let p = &profiles[i];
            c.members.insert(p.address);
            c.urls.extend(p.contract_urls.iter().cloned());
            c.videos.extend(p.video_titles.iter().cloned());
            c.accounts.extend(p.accounts.iter().cloned());
            for a in &p.accounts {
                *c.account_frequency.entry(a.clone()).or_default() += 1;
            }
            let mine = profit.get(&p.address);
            c.member_profit_wei
                .insert(p.address, mine.map(|m| m.values().sum()).unwrap_or(0));
            for (chain, v) in mine.into_iter().flatten() {
                *c.profit_wei.entry(chain.clone()).or_default() += v;
            }
        }
        clusters.push(c);
    }
    clusters.sort_by_key(|c| *c.members.iter().next().unwrap());
    for (i, c) in clusters.iter_mut().enumerate() {
        c.id = i + 1;
    }
    ClusterReport {
        clusters,
        singletons,
        totals,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricStats {
    pub metric: String,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub sum: f64,
    /// Share of the dataset-wide total, when that total is non-zero.
    pub percent_of_total: Option<f64>,
}

/// One row of the top-clusters table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopClusterRow {
    #[serde(rename = "Cluster ID")]
    pub cluster_id: usize,
    #[serde(rename = "# Addresses")]
    pub addresses: usize,
    #[serde(rename = "ETH")]
    pub eth: String,
    #[serde(rename = "BNB")]
    pub bnb: String,
    #[serde(rename = "# Bot Contracts")]
    pub bot_contracts: usize,
    #[serde(rename = "# YouTube Videos")]
    pub videos: usize,
    #[serde(rename = "# YouTube Accounts")]
    pub accounts: usize,
    #[serde(rename = "Representative Account")]
    pub representative_account: String,
    #[serde(rename = "Representative Address")]
    pub representative_address: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub clusters: usize,
    pub metrics: Vec<MetricStats>,
    pub top: Vec<TopClusterRow>,
}

impl ClusterSummary {
    pub fn metric(&self, name: &str) -> Option<&MetricStats> {
        self.metrics.iter().find(|m| m.metric == name)
    }

    pub fn top_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.top {
            w.serialize(row)?;
        }
        if self.top.is_empty() {
            w.write_record(TOP_HEADER)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

const TOP_HEADER: [&str; 9] = [
    "Cluster ID",
    "# Addresses",
    "ETH",
    "BNB",
    "# Bot Contracts",
    "# YouTube Videos",
    "# YouTube Accounts",
    "Representative Account",
    "Representative Address",
];

fn describe(metric: &str, values: &[f64], total: Option<f64>) -> MetricStats {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let sum: f64 = sorted.iter().sum();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    MetricStats {
        metric: metric.to_string(),
        mean: sum / n as f64,
        median,
        min: sorted[0],
        max: sorted[n - 1],
        sum,
        percent_of_total: total.filter(|t| *t > 0.0).map(|t| sum * 100.0 / t),
    }
}

fn coin(wei: u128) -> f64 {
    wei as f64 / WEI_PER_COIN
}

fn coin_text(wei: u128) -> String {
    format!("{:.1}", coin(wei))
}

/// Per-metric statistics over clusters plus the `top_k` clusters by
/// combined profit (ties by id).
pub fn cluster_stats(clusters: &[ScamCluster], totals: &UniverseTotals, top_k: usize) -> ClusterSummary {
    if clusters.is_empty() {
        return ClusterSummary {
            clusters: 0,
            metrics: Vec::new(),
            top: Vec::new(),
        };
    }
    let col = |f: &dyn Fn(&ScamCluster) -> f64| clusters.iter().map(f).collect::<Vec<f64>>();
    let share = |n: usize| Some(n as f64);
    let mut metrics = vec![
        describe("addresses", &col(&|c| c.members.len() as f64), share(totals.addresses)),
        describe("contract_urls", &col(&|c| c.urls.len() as f64), share(totals.urls)),
        describe("videos", &col(&|c| c.videos.len() as f64), share(totals.videos)),
        describe("accounts", &col(&|c| c.accounts.len() as f64), share(totals.accounts)),
    ];
    let mut chains: BTreeSet<Chain> = [Chain::Eth, Chain::Bsc].into();
    chains.extend(clusters.iter().flat_map(|c| c.profit_wei.keys().cloned()));
    for chain in chains {
        let values = col(&|c| coin(c.profit_on(&chain)));
        let total = totals.profit_wei.get(&chain).map(|w| coin(*w));
        metrics.push(describe(&format!("profit_{}", chain.coin().to_lowercase()), &values, total));
    }

    let mut ranked: Vec<&ScamCluster> = clusters.iter().collect();
    ranked.sort_by(|a, b| {
        b.combined_profit_wei()
            .cmp(&a.combined_profit_wei())
            .then_with(|| a.id.cmp(&b.id))
    });
    let top = ranked
        .into_iter()
        .take(top_k)
        .map(|c| TopClusterRow {
            cluster_id: c.id,
            addresses: c.members.len(),
            eth: coin_text(c.profit_on(&Chain::Eth)),
            bnb: coin_text(c.profit_on(&Chain::Bsc)),
            bot_contracts: c.urls.len(),
            videos: c.videos.len(),
            accounts: c.accounts.len(),
            representative_account: c.representative_account().unwrap_or("").to_string(),
            representative_address: c.representative_address().to_lower_hex(),
        })
        .collect();
    ClusterSummary {
        clusters: clusters.len(),
        metrics,
        top,
    }
}
