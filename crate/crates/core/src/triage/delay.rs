use std::collections::BTreeMap;

use serde::Serialize;

use super::VideoRecord;
use crate::victims::{count_distribution, Bucket, BucketTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayRow {
    pub bucket: &'static str,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayTable {
    /// Records with a non-negative delay.
    pub total: usize,
    pub rows: Vec<DelayRow>,
    /// Videos captured before their recorded creation time.
    pub negative: Vec<String>,
}

impl DelayTable {
    pub fn percent_labels(&self) -> Vec<String> {
        self.rows.iter().map(|r| format!("{:.1}%", r.percent)).collect()
    }
}

/// `<10` is cumulative and includes the same-day row, so rows do not sum
/// to the total; the remaining rows partition delays above ten days.
const DELAY_BUCKETS: &[(&str, u64, Option<u64>)] = &[
    ("<1", 0, Some(0)),
    ("<10", 0, Some(10)),
    ("11-100", 11, Some(100)),
    ("101-260", 101, Some(260)),
    (">260", 261, None),
];

/// Whole days between creation and capture, bucketed.
pub fn detection_delay(records: &[VideoRecord]) -> DelayTable {
    let mut negative = Vec::new();
    let mut days = Vec::new();
    for r in records {
        let delta = r.captured_at - r.created_at;
        if delta < chrono::Duration::zero() {
            negative.push(r.video_id.clone());
        } else {
            days.push(delta.num_days() as u64);
        }
    }
    let total = days.len();
    let rows = DELAY_BUCKETS
        .iter()
        .map(|&(bucket, lo, hi)| {
            let count = days.iter().filter(|&&d| d >= lo && hi.map_or(true, |h| d <= h)).count();
            DelayRow {
                bucket,
                count,
                percent: if total == 0 { 0.0 } else { count as f64 * 100.0 / total as f64 },
            }
        })
        .collect();
    DelayTable { total, rows, negative }
}

pub const CREATOR_BUCKETS: &[Bucket] = &[
    Bucket::new(1, Some(1)),
    Bucket::new(2, Some(2)),
    Bucket::new(3, Some(3)),
    Bucket::new(4, None),
];

/// Accounts bucketed by how many of the given videos they created.
pub fn creator_distribution(records: &[VideoRecord]) -> BucketTable {
    let mut per_account: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        *per_account.entry(&r.creator_account).or_default() += 1;
    }
    count_distribution(per_account.into_values(), CREATOR_BUCKETS).expect("static buckets are valid")
}
