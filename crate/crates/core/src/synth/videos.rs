use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::triage::{Label, VideoRecord};

const SCAM_WORDS: &[&str] = &[
    "arbitrage", "bot", "mev", "frontrun", "uniswap", "pancakeswap", "passive", "income", "profit",
    "daily", "deploy", "remix", "contract", "liquidity", "sandwich", "slippage", "mempool", "gas",
    "wallet", "metamask", "withdraw", "start", "eth", "bnb", "earn", "guaranteed", "tutorial",
    "source", "code", "free", "crypto", "flashloan", "trading", "automated", "returns", "stepbystep",
    "scanner", "token", "dex", "whale", "percent", "weekly", "setup", "copy", "paste", "compile",
    "solidity", "router", "pairs", "opportunity",
];

const NORMAL_WORDS: &[&str] = &[
    "recipe", "cooking", "pasta", "garden", "travel", "vlog", "morning", "routine", "music", "guitar",
    "cover", "lesson", "football", "highlights", "review", "camera", "unboxing", "makeup", "fitness",
    "workout", "yoga", "painting", "watercolor", "history", "documentary", "podcast", "episode",
    "puppy", "training", "hiking", "mountain", "lake", "fishing", "bread", "baking", "chess",
    "opening", "piano", "dance", "choreography", "science", "experiment", "astronomy", "planets",
    "knitting", "pattern", "woodworking", "table", "skateboard", "tricks",
];

/// Scam titles get these emoji; the shipped emoji map turns them into words
/// that only occur in scam samples.
const SCAM_EMOJI: &[&str] = &["\u{1F680}", "\u{1F4B0}", "\u{1F525}", "\u{1F4C8}"];

fn words<R: Rng>(rng: &mut R, vocab: &[&str], lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| *vocab.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

/// Labeled video records whose two classes draw on disjoint vocabularies, so
/// a bag-of-words model can separate them perfectly.
pub fn generate_video_corpus(seed: u64, scam: usize, normal: usize) -> Vec<VideoRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Utc.with_ymd_and_hms(2022, 6, 1, 0, 0, 0).single().expect("valid date");
    let mut labels: Vec<Label> = std::iter::repeat(Label::Scam)
        .take(scam)
        .chain(std::iter::repeat(Label::Normal).take(normal))
        .collect();
    labels.shuffle(&mut rng);

    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let (title, description) = match label {
                Label::Scam => {
                    let emoji = SCAM_EMOJI.choose(&mut rng).expect("non-empty");
                    let title = format!("{} {emoji}", words(&mut rng, SCAM_WORDS, 3, 7));
                    let paste: String = (0..8)
                        .map(|_| *b"ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz23456789".choose(&mut rng).unwrap() as char)
                        .collect();
                    let description = format!(
                        "{} code https://pastebin.com/raw/{paste} {}",
                        words(&mut rng, SCAM_WORDS, 4, 10),
                        words(&mut rng, SCAM_WORDS, 2, 6)
                    );
                    (title, description)
                }
                Label::Normal => (
                    words(&mut rng, NORMAL_WORDS, 3, 7),
                    words(&mut rng, NORMAL_WORDS, 6, 16),
                ),
            };
            let created_at = base + Duration::minutes(rng.gen_range(0..525_600));
            let delay = match rng.gen_range(0..10) {
                0..=4 => Duration::hours(rng.gen_range(0..24)),
                5..=8 => Duration::days(rng.gen_range(1..=10)),
                _ => Duration::days(rng.gen_range(11..=260)),
            };
            VideoRecord {
                video_id: format!("vid{i:05}"),
                title,
                description,
                creator_account: format!("acct{}", rng.gen_range(0..(scam + normal).max(1) / 2 + 1)),
                created_at,
                captured_at: created_at + delay,
                view_count: Some(rng.gen_range(0..100_000)),
                label: Some(label),
            }
        })
        .collect()
}
