mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scamlens_core::chain::{load_fixture, Chain};
use scamlens_core::cluster::{
    build_clusters, cluster_stats, scam_counterparties, ProfileBuilder, ScamCluster, ScamProfile,
    UniverseTotals,
};
use scamlens_core::deobfuscate::SignatureCatalog;
use scamlens_core::victims::classify_victim_txs;
use scamlens_core::Address;

use common::fixtures_dir;

const SCAM: &str = "0x2c1b6D43A52ea97d61979C22B7aa7B83352c1a2d";
const SCAM2: &str = "0xCdf8BFE2C60B97b3fe47ac74b3FCaE89aC2A450a";

fn a(text: &str) -> Address {
    text.parse().unwrap()
}

fn addr(n: u8) -> Address {
    let mut b = [0u8; 20];
    b[0] = 0xaa;
    b[19] = n;
    Address(b)
}

#[test]
fn case_study_addresses_cluster_through_self_deposit() {
    let store = load_fixture(&fixtures_dir().join("chain/case_study")).unwrap();
    let scams = BTreeSet::from([a(SCAM), a(SCAM2)]);
    let catalog: SignatureCatalog = [("start()".to_string(), 1)].into_iter().collect();
    let ledger = classify_victim_txs(&store, &scams, &catalog, &Chain::Eth).unwrap();
    let pairs = scam_counterparties(&store, &ledger).unwrap();
    assert_eq!(pairs.len(), 1);

    let mut builder = ProfileBuilder::new();
    for s in &scams {
        builder.entry(*s).chains.insert(Chain::Eth);
    }
    for (x, y) in pairs {
        builder.add_counterparty(x, y);
    }
    let report = build_clusters(&builder.build(), std::slice::from_ref(&ledger));
    assert_eq!(report.clusters.len(), 1);
    assert_eq!(report.clusters[0].members, scams);
    assert!(report.singletons.is_empty());
    assert_eq!(report.clusters[0].profit_on(&Chain::Eth), ledger.total_wei());
    assert_eq!(report.clusters[0].representative_address(), a(SCAM));
}

#[test]
fn shared_url_links_addresses() {
    let mut b = ProfileBuilder::new();
    b.add_url(addr(1), "https://pastebin.com/raw/1Tt9FwKd");
    b.add_url(addr(2), "https://pastebin.com/raw/1Tt9FwKd");
    b.add_url(addr(3), "https://pastebin.com/raw/other");
    let report = build_clusters(&b.build(), &[]);
    assert_eq!(report.clusters.len(), 1);
    assert_eq!(report.clusters[0].members, BTreeSet::from([addr(1), addr(2)]));
    assert_eq!(report.singletons, BTreeSet::from([addr(3)]));
}

#[test]
fn unrelated_profiles_are_singletons() {
    let mut b = ProfileBuilder::new();
    for i in 0..5 {
        b.add_url(addr(i), &format!("https://rentry.co/{i}"));
        b.add_video(addr(i), &format!("acct{i}"), &format!("title number {i}"));
    }
    let report = build_clusters(&b.build(), &[]);
    assert!(report.clusters.is_empty());
    assert_eq!(report.singletons.len(), 5);
}

#[test]
fn accounts_and_titles_link() {
    let mut b = ProfileBuilder::new();
    b.add_video(addr(1), "***Crypto", "Arbitrage bot 🚀");
    b.add_video(addr(2), "***Crypto", "something else");
    b.add_video(addr(3), "other", "ARBITRAGE-BOT!!");
    b.add_video(addr(4), "x", "🚀🚀");
    b.add_video(addr(5), "y", "💰 🔥");
    let report = build_clusters(&b.build(), &[]);
    assert_eq!(report.clusters.len(), 1);
    assert_eq!(report.clusters[0].members, BTreeSet::from([addr(1), addr(2), addr(3)]));
    // Emoji-only titles normalize to nothing and never link.
    assert_eq!(report.singletons, BTreeSet::from([addr(4), addr(5)]));
    assert_eq!(report.clusters[0].representative_account(), Some("***Crypto"));
}

#[test]
fn duplicate_profiles_merge() {
    let mut p1 = ScamProfile::new(addr(1));
    p1.contract_urls.insert("u".into());
    let mut p1b = ScamProfile::new(addr(1));
    p1b.accounts.insert("acc".into());
    let mut p2 = ScamProfile::new(addr(2));
    p2.accounts.insert("acc".into());
    let report = build_clusters(&[p1, p1b, p2], &[]);
    assert_eq!(report.clusters.len(), 1);
    assert_eq!(report.clusters[0].urls.len(), 1);
    assert_eq!(report.totals.addresses, 2);
}

fn cluster_of(size: u8, start: u8, eth_wei: u128) -> ScamCluster {
    let mut b = ProfileBuilder::new();
    for i in 0..size {
        b.add_video(addr(start + i), "shared", "t");
    }
    let mut c = build_clusters(&b.build(), &[]).clusters.remove(0);
    c.profit_wei.insert(Chain::Eth, eth_wei);
    c
}

#[test]
fn stats_of_two_clusters() {
    let clusters = vec![cluster_of(2, 0, 10u128.pow(18)), cluster_of(59, 100, 3 * 10u128.pow(18))];
    let totals = UniverseTotals {
        addresses: 200,
        ..UniverseTotals::default()
    };
    let s = cluster_stats(&clusters, &totals, 10);
    let m = s.metric("addresses").unwrap();
    assert_eq!((m.min, m.max, m.mean, m.median, m.sum), (2.0, 59.0, 30.5, 30.5, 61.0));
    assert_eq!(m.percent_of_total, Some(30.5));
    let eth = s.metric("profit_eth").unwrap();
    assert_eq!((eth.min, eth.max, eth.sum), (1.0, 3.0, 4.0));
    assert_eq!(s.top.len(), 2);
    assert_eq!(s.top[0].addresses, 59);
    assert_eq!(s.top[0].eth, "3.0");
}

#[test]
fn stats_edge_cases() {
    let empty = cluster_stats(&[], &UniverseTotals::default(), 4);
    assert_eq!(empty.clusters, 0);
    assert!(empty.metrics.is_empty() && empty.top.is_empty());
    let header = empty.top_csv().unwrap();
    assert_eq!(
        header.trim_end(),
        "Cluster ID,# Addresses,ETH,BNB,# Bot Contracts,# YouTube Videos,# YouTube Accounts,Representative Account,Representative Address"
    );

    let one = cluster_stats(&[cluster_of(3, 0, 0)], &UniverseTotals::default(), 4);
    for m in &one.metrics {
        assert!(m.mean == m.median && m.median == m.min && m.min == m.max, "{m:?}");
        assert_eq!(m.percent_of_total, None);
    }
    let csv = one.top_csv().unwrap();
    assert!(csv.starts_with("Cluster ID,# Addresses,ETH,BNB,"));
    assert_eq!(csv.lines().count(), 2);
}

/// Random profiles over small attribute pools so that links are common.
fn random_profiles(seed: u64, n: usize) -> Vec<ScamProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let titles = ["Free Money Bot", "free money bot!!", "🚀🚀", "", "MEV bot 2023", "mev BOT 2023 💰", "Passive income", "🔥"];
    (0..n)
        .map(|i| {
            let mut p = ScamProfile::new(addr(i as u8));
            if rng.gen_bool(0.3) {
                p.contract_urls.insert(format!("https://pastebin.com/raw/{}", rng.gen_range(0..3 * n)));
            }
            if rng.gen_bool(0.3) {
                p.accounts.insert(format!("acct{}", rng.gen_range(0..3 * n)));
            }
            if rng.gen_bool(0.3) {
                p.video_titles.insert(titles.choose(&mut rng).unwrap().to_string());
            }
            if rng.gen_bool(0.1) {
                // sometimes a counterparty outside the dataset
                p.counterparty_scam_addrs.insert(addr(rng.gen_range(0..(n as u8).saturating_add(20))));
            }
            p
        })
        .collect()
}

fn canon(t: &str) -> String {
    t.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Pairwise predicate plus repeated relaxation until no label changes.
fn oracle(profiles: &[ScamProfile]) -> BTreeSet<BTreeSet<Address>> {
    let n = profiles.len();
    let link = |p: &ScamProfile, q: &ScamProfile| {
        p.counterparty_scam_addrs.contains(&q.address)
            || q.counterparty_scam_addrs.contains(&p.address)
            || p.contract_urls.iter().any(|u| q.contract_urls.contains(u))
            || p.accounts.iter().any(|u| q.accounts.contains(u))
            || p.video_titles.iter().any(|t| {
                let c = canon(t);
                !c.is_empty() && q.video_titles.iter().any(|s| canon(s) == c)
            })
    };
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if link(&profiles[i], &profiles[j]) && label[j] < label[i] {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<Address>> = BTreeMap::new();
    for (i, l) in label.iter().enumerate() {
        groups.entry(*l).or_default().insert(profiles[i].address);
    }
    groups.into_values().filter(|g| g.len() > 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clusters_equal_closure_oracle(seed in any::<u64>(), n in 1usize..200) {
        let profiles = random_profiles(seed, n);
        let report = build_clusters(&profiles, &[]);
        let got: BTreeSet<BTreeSet<Address>> = report.clusters.iter().map(|c| c.members.clone()).collect();
        prop_assert_eq!(&got, &oracle(&profiles));

        // partition
        let mut seen = BTreeSet::new();
        for c in &report.clusters {
            prop_assert!(c.members.len() >= 2);
            for m in &c.members {
                prop_assert!(seen.insert(*m));
            }
        }
        for s in &report.singletons {
            prop_assert!(seen.insert(*s));
        }
        prop_assert_eq!(seen.len(), n);
    }

    #[test]
    fn input_order_is_irrelevant(seed in any::<u64>(), n in 1usize..80, shuffle in any::<u64>()) {
        let profiles = random_profiles(seed, n);
        let mut shuffled = profiles.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        prop_assert_eq!(build_clusters(&profiles, &[]), build_clusters(&shuffled, &[]));
    }

    #[test]
    fn emoji_titles_never_link(n in 2usize..30) {
        let profiles: Vec<ScamProfile> = (0..n).map(|i| {
            let mut p = ScamProfile::new(addr(i as u8));
            p.video_titles.insert(["🚀", "🔥 💰", "!!!", "  "][i % 4].to_string());
            p
        }).collect();
        let report = build_clusters(&profiles, &[]);
        prop_assert!(report.clusters.is_empty());
    }
}
