//! Token-level clone matching with address-fragment masking.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::solidity::{emit_source, is_elementary_type, tokenize, SourceUnit, TokenKind};

/// Literals at least this long are kept verbatim; shorter ones are masked.
pub const MASK_CUTOFF: usize = 41;

/// Score floors in basis points.
pub const HIGH_BPS: u64 = 9_500;
pub const MEDIUM_BPS: u64 = 8_000;

/// Level floors in basis points; `medium_bps < high_bps <= 10_000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Thresholds {
    pub high_bps: u64,
    pub medium_bps: u64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            high_bps: HIGH_BPS,
            medium_bps: MEDIUM_BPS,
        }
    }
}

impl Thresholds {
    pub fn new(high_bps: u64, medium_bps: u64) -> Option<Self> {
        (medium_bps < high_bps && high_bps <= 10_000).then_some(Thresholds { high_bps, medium_bps })
    }
}

const KEYWORDS: &[&str] = &[
    "pragma", "solidity", "import", "from", "as", "contract", "interface", "library", "abstract", "is",
    "function", "constructor", "receive", "fallback", "modifier", "event", "emit", "struct", "enum",
    "mapping", "using", "for", "if", "else", "while", "do", "break", "continue", "return", "returns",
    "public", "private", "internal", "external", "pure", "view", "constant", "immutable", "virtual",
    "override", "memory", "storage", "calldata", "indexed", "anonymous", "new", "delete", "true", "false",
    "this", "super", "msg", "sender", "value", "data", "tx", "origin", "block", "timestamp", "number",
    "now", "abi", "encodePacked", "encode", "decode", "concat", "transfer", "send", "call", "balance",
    "length", "push", "pop", "require", "assert", "revert", "keccak256", "sha256", "selfdestruct",
    "assembly", "unchecked", "try", "catch", "wei", "gwei", "szabo", "finney", "ether", "seconds",
    "minutes", "hours", "days", "weeks", "years",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum CanonToken {
    Keyword(String),
    Punct(String),
    /// Identifier renamed to its first-occurrence index.
    Ident(u32),
    Masked,
    Str(String),
    Number(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormalizedContract {
    pub source_id: String,
    pub tokens: Vec<CanonToken>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SimilarityLevel {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimilarityVerdict {
    /// Score as the exact fraction `score_num / score_den`.
    pub score_num: u64,
    pub score_den: u64,
    pub level: SimilarityLevel,
    pub differing_token_count: u64,
}

impl SimilarityVerdict {
    pub fn score(&self) -> f64 {
        self.score_num as f64 / self.score_den as f64
    }

    fn at_least_bps(&self, bps: u64) -> bool {
        u128::from(self.score_num) * 10_000 >= u128::from(bps) * u128::from(self.score_den)
    }
}

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word) || is_elementary_type(word)
}

fn is_hex_number(text: &str) -> bool {
    text.starts_with("0x") || text.starts_with("0X")
}

/// Canonical token stream of a unit: the emitted source re-lexed, with
/// identifiers alpha-renamed and short string/hex literals masked.
pub fn normalize(unit: &SourceUnit, source_id: impl Into<String>) -> NormalizedContract {
    let text = emit_source(unit);
    // Emitted text always lexes: it is built from lexed tokens.
    let toks = tokenize(&text).unwrap_or_default();
    let mut names: HashMap<String, u32> = HashMap::new();
    let tokens = toks
        .into_iter()
        .map(|t| match t.kind {
            TokenKind::Ident(w) if is_keyword(&w) => CanonToken::Keyword(w),
            TokenKind::Ident(w) => {
                let next = names.len() as u32;
                CanonToken::Ident(*names.entry(w).or_insert(next))
            }
            TokenKind::Str(s) | TokenKind::HexStr(s) if s.chars().count() < MASK_CUTOFF => CanonToken::Masked,
            TokenKind::Str(s) => CanonToken::Str(s),
            TokenKind::HexStr(s) => CanonToken::Str(format!("hex:{s}")),
            TokenKind::Number(n) if is_hex_number(&n) && n.len() < MASK_CUTOFF => CanonToken::Masked,
            TokenKind::Number(n) => CanonToken::Number(n),
            TokenKind::Punct(p) => CanonToken::Punct(p.to_string()),
        })
        .collect();
    NormalizedContract { source_id: source_id.into(), tokens }
}

impl NormalizedContract {
    /// Applies the renaming step again to an already-normalized stream.
    pub fn renormalize(&self) -> NormalizedContract {
        let mut names: HashMap<u32, u32> = HashMap::new();
        let tokens = self
            .tokens
            .iter()
            .map(|t| match t {
                CanonToken::Ident(i) => {
                    let next = names.len() as u32;
                    CanonToken::Ident(*names.entry(*i).or_insert(next))
                }
                other => other.clone(),
            })
            .collect();
        NormalizedContract { source_id: self.source_id.clone(), tokens }
    }
}

/// Edit distance over token sequences with unit costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.len() < b.len() {
        return levenshtein(b, a);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance if it is at most `k`, computed only inside the diagonal
/// band that such a distance can reach.
pub fn levenshtein_within<T: PartialEq>(a: &[T], b: &[T], k: usize) -> Option<usize> {
    if a.len() < b.len() {
        return levenshtein_within(b, a, k);
    }
    let (n, m) = (a.len(), b.len());
    if n - m > k {
        return None;
    }
    let inf = k + 1;
    let mut prev: Vec<usize> = (0..=m).map(|j| j.min(inf)).collect();
    let mut cur = vec![inf; m + 1];
    for i in 1..=n {
        let lo = i.saturating_sub(k).max(1);
        let hi = (i + k).min(m);
        cur[lo - 1] = if lo == 1 { i.min(inf) } else { inf };
        let mut best = cur[lo - 1];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1).min(inf);
            cur[j] = v;
            best = best.min(v);
        }
        if hi < m {
            cur[hi + 1] = inf;
        }
        if best > k {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (prev[m] <= k).then_some(prev[m])
}

fn interned<'t>(a: &'t [CanonToken], b: &'t [CanonToken]) -> (Vec<u32>, Vec<u32>) {
    let mut ids: HashMap<&'t CanonToken, u32> = HashMap::new();
    let mut intern = |s: &'t [CanonToken]| -> Vec<u32> {
        s.iter()
            .map(|t| {
                let next = ids.len() as u32;
                *ids.entry(t).or_insert(next)
            })
            .collect()
    };
    let x = intern(a);
    let y = intern(b);
    (x, y)
}

pub fn similarity_score(a: &NormalizedContract, b: &NormalizedContract) -> SimilarityVerdict {
    similarity_score_with(a, b, &Thresholds::default())
}

pub fn similarity_score_with(
    a: &NormalizedContract,
    b: &NormalizedContract,
    thresholds: &Thresholds,
) -> SimilarityVerdict {
    let longest = a.tokens.len().max(b.tokens.len()) as u64;
    if longest == 0 {
        return SimilarityVerdict { score_num: 1, score_den: 1, level: SimilarityLevel::High, differing_token_count: 0 };
    }
    let (x, y) = interned(&a.tokens, &b.tokens);
    verdict_for(longest, levenshtein(&x, &y) as u64, thresholds)
}

fn verdict_for(longest: u64, distance: u64, thresholds: &Thresholds) -> SimilarityVerdict {
    let mut verdict = SimilarityVerdict {
        score_num: longest - distance,
        score_den: longest,
        level: SimilarityLevel::Low,
        differing_token_count: distance,
    };
    verdict.level = if verdict.at_least_bps(thresholds.high_bps) {
        SimilarityLevel::High
    } else if verdict.at_least_bps(thresholds.medium_bps) {
        SimilarityLevel::Medium
    } else {
        SimilarityLevel::Low
    };
    verdict
}

/// Same verdict as [`similarity_score_with`] when the score reaches `bps`;
/// `None` otherwise, without finishing the full distance matrix.
fn bounded_score(
    a: &NormalizedContract,
    b: &NormalizedContract,
    bps: u64,
    thresholds: &Thresholds,
) -> Option<SimilarityVerdict> {
    let longest = a.tokens.len().max(b.tokens.len()) as u64;
    if longest == 0 {
        return Some(similarity_score_with(a, b, thresholds));
    }
    // Largest distance d with (longest - d) / longest >= bps / 10000.
    let k = longest - (u128::from(bps) * u128::from(longest)).div_ceil(10_000) as u64;
    let (x, y) = interned(&a.tokens, &b.tokens);
    let distance = levenshtein_within(&x, &y, k as usize)?;
    Some(verdict_for(longest, distance as u64, thresholds))
}

/// Corpus entries scoring at or above `floor`, best first, ties by id.
pub fn find_similar(
    corpus: &[NormalizedContract],
    query: &NormalizedContract,
    floor: SimilarityLevel,
) -> Vec<(String, SimilarityVerdict)> {
    find_similar_with(corpus, query, floor, &Thresholds::default())
}

pub fn find_similar_with(
    corpus: &[NormalizedContract],
    query: &NormalizedContract,
    floor: SimilarityLevel,
    thresholds: &Thresholds,
) -> Vec<(String, SimilarityVerdict)> {
    let floor_bps = match floor {
        SimilarityLevel::Low => None,
        SimilarityLevel::Medium => Some(thresholds.medium_bps),
        SimilarityLevel::High => Some(thresholds.high_bps),
    };
    let mut hits: Vec<(String, SimilarityVerdict)> = corpus
        .par_iter()
        .filter_map(|c| {
            let verdict = match floor_bps {
                None => similarity_score_with(query, c, thresholds),
                Some(bps) => bounded_score(query, c, bps, thresholds)?,
            };
            (verdict.level >= floor).then(|| (c.source_id.clone(), verdict))
        })
        .collect();
    hits.sort_by(|(ia, va), (ib, vb)| {
        let lhs = u128::from(vb.score_num) * u128::from(va.score_den);
        let rhs = u128::from(va.score_num) * u128::from(vb.score_den);
        lhs.cmp(&rhs).then_with(|| ia.cmp(ib))
    });
    hits
}
