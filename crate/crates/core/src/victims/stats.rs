use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::Datelike;
use serde::Serialize;
use thiserror::Error;

use super::VictimLedger;
use crate::address::Address;
use crate::chain::Chain;

/// Inclusive integer range; `hi = None` is open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bucket {
    pub lo: u64,
    pub hi: Option<u64>,
}

impl Bucket {
    pub const fn new(lo: u64, hi: Option<u64>) -> Self {
        Bucket { lo, hi }
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo && self.hi.map_or(true, |hi| n <= hi)
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            None if self.lo == 0 => write!(f, ">=0"),
            None => write!(f, ">{}", self.lo - 1),
            Some(hi) if hi == self.lo => write!(f, "{}", self.lo),
            Some(hi) => write!(f, "{}-{hi}", self.lo),
        }
    }
}

pub const DEFAULT_VICTIM_BUCKETS: &[Bucket] =
    &[Bucket::new(1, Some(1)), Bucket::new(2, Some(2)), Bucket::new(3, None)];

pub const DEFAULT_SCAM_BUCKETS: &[Bucket] = &[
    Bucket::new(0, Some(0)),
    Bucket::new(1, Some(10)),
    Bucket::new(11, Some(20)),
    Bucket::new(21, None),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BucketError {
    #[error("bucket list is empty")]
    Empty,
    #[error("bucket {0} has hi < lo")]
    Inverted(String),
    #[error("buckets {0} and {1} overlap or leave a gap")]
    NotContiguous(String, String),
    #[error("bucket {0} is not last but has no upper bound")]
    OpenBeforeEnd(String),
}

fn check_buckets(buckets: &[Bucket]) -> Result<(), BucketError> {
    if buckets.is_empty() {
        return Err(BucketError::Empty);
    }
    for (i, b) in buckets.iter().enumerate() {
        if b.hi.is_some_and(|hi| hi < b.lo) {
            return Err(BucketError::Inverted(b.to_string()));
        }
        if let Some(next) = buckets.get(i + 1) {
            match b.hi {
                None => return Err(BucketError::OpenBeforeEnd(b.to_string())),
                Some(hi) if hi + 1 != next.lo => {
                    return Err(BucketError::NotContiguous(b.to_string(), next.to_string()))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub bucket: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketTable {
    pub total: usize,
    pub rows: Vec<BucketRow>,
    /// Values falling outside every bucket.
    pub unbucketed: usize,
}

impl BucketTable {
    /// Percentages rounded to one decimal for display.
    pub fn percent_labels(&self) -> Vec<String> {
        self.rows.iter().map(|r| format!("{:.1}%", r.percent)).collect()
    }
}

fn bucketize(counts: impl Iterator<Item = u64>, buckets: &[Bucket]) -> BucketTable {
    let mut hits = vec![0usize; buckets.len()];
    let mut total = 0;
    let mut unbucketed = 0;
    for n in counts {
        total += 1;
        match buckets.iter().position(|b| b.contains(n)) {
            Some(i) => hits[i] += 1,
            None => unbucketed += 1,
        }
    }
    let rows = buckets
        .iter()
        .zip(hits)
        .map(|(b, count)| BucketRow {
            bucket: b.to_string(),
            count,
            percent: if total == 0 { 0.0 } else { count as f64 * 100.0 / total as f64 },
        })
        .collect();
    BucketTable {
        total,
        rows,
        unbucketed,
    }
}

/// Buckets arbitrary per-entity counts after validating the bucket list.
pub fn count_distribution(
    counts: impl IntoIterator<Item = u64>,
    buckets: &[Bucket],
) -> Result<BucketTable, BucketError> {
    check_buckets(buckets)?;
    Ok(bucketize(counts.into_iter(), buckets))
}

/// Victims bucketed by how many victim transactions they sent, and scam
/// addresses by how many they profited from (zero included).
pub fn tx_count_distributions(
    ledger: &VictimLedger,
    victim_buckets: &[Bucket],
    scam_buckets: &[Bucket],
) -> Result<(BucketTable, BucketTable), BucketError> {
    check_buckets(victim_buckets)?;
    check_buckets(scam_buckets)?;
    let per_victim = ledger.per_victim_totals();
    let victims = bucketize(per_victim.values().map(|(_, n)| *n as u64), victim_buckets);

    let mut per_scam: BTreeMap<Address, u64> = ledger.scam_addresses.iter().map(|a| (*a, 0)).collect();
    for v in &ledger.victim_txs {
        *per_scam.entry(v.tx.to).or_default() += 1;
    }
    let scams = bucketize(per_scam.values().copied(), scam_buckets);
    Ok((victims, scams))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub per_chain: BTreeMap<Chain, usize>,
    pub distinct_total: usize,
    /// Addresses that are victims on more than one chain.
    pub cross_chain_count: usize,
}

/// Victim address overlap across chains. Ledgers for the same chain are merged.
pub fn victim_overlap(ledgers: &[&VictimLedger]) -> Overlap {
    let mut by_chain: BTreeMap<Chain, BTreeSet<Address>> = BTreeMap::new();
    for l in ledgers {
        by_chain.entry(l.chain.clone()).or_default().extend(&l.victim_addrs);
    }
    let mut seen: BTreeMap<Address, usize> = BTreeMap::new();
    for set in by_chain.values() {
        for a in set {
            *seen.entry(*a).or_default() += 1;
        }
    }
    Overlap {
        per_chain: by_chain.iter().map(|(c, s)| (c.clone(), s.len())).collect(),
        distinct_total: seen.len(),
        cross_chain_count: seen.values().filter(|&&n| n > 1).count(),
    }
}

/// Two-chain overlap from set sizes: `|A| + |B| - |A ∪ B|`.
pub fn cross_chain_from_counts(a: usize, b: usize, union: usize) -> Option<usize> {
    (a + b).checked_sub(union)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonthRow {
    /// `YYYY-MM`.
    pub month: String,
    pub tx_count: usize,
    pub total_wei: u128,
}

/// Victim transactions per UTC month, with empty months in between filled.
pub fn monthly_timeline(ledger: &VictimLedger) -> Vec<MonthRow> {
    let mut months: BTreeMap<(i32, u32), (usize, u128)> = BTreeMap::new();
    for v in &ledger.victim_txs {
        let t = v.tx.block_time;
        let e = months.entry((t.year(), t.month())).or_default();
        e.0 += 1;
        e.1 += v.tx.value_wei;
    }
    let (Some(&first), Some(&last)) = (months.keys().next(), months.keys().last()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let (mut y, mut m) = first;
    while (y, m) <= last {
        let (tx_count, total_wei) = months.get(&(y, m)).copied().unwrap_or((0, 0));
        out.push(MonthRow {
            month: format!("{y:04}-{m:02}"),
            tx_count,
            total_wei,
        });
        if m == 12 {
            y += 1;
            m = 1;
        } else {
            m += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_labels() {
        let labels: Vec<String> = DEFAULT_SCAM_BUCKETS.iter().map(|b| b.to_string()).collect();
        assert_eq!(labels, ["0", "1-10", "11-20", ">20"]);
        let labels: Vec<String> = DEFAULT_VICTIM_BUCKETS.iter().map(|b| b.to_string()).collect();
        assert_eq!(labels, ["1", "2", ">2"]);
    }

    #[test]
    fn bucket_validation() {
        assert_eq!(check_buckets(&[]), Err(BucketError::Empty));
        assert!(check_buckets(&[Bucket::new(1, Some(2)), Bucket::new(2, None)]).is_err());
        assert!(check_buckets(&[Bucket::new(1, Some(2)), Bucket::new(4, None)]).is_err());
        assert!(check_buckets(&[Bucket::new(1, None), Bucket::new(4, None)]).is_err());
        assert!(check_buckets(DEFAULT_SCAM_BUCKETS).is_ok());
    }

    #[test]
    fn overlap_arithmetic_identity() {
        assert_eq!(cross_chain_from_counts(12_790, 13_388, 25_933), Some(245));
    }
}
