mod common;

use common::contract_fixture;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scamlens_core::deobfuscate::{evaluate_address, find_transfer_sinks, ImportStore};
use scamlens_core::similarity::*;
use scamlens_core::solidity::{parse_source, SourceItem};
use scamlens_core::synth::{self, SynthOptions};
use scamlens_core::Address;

fn norm_fixture(name: &str) -> NormalizedContract {
    normalize(&parse_source(&contract_fixture(name)).unwrap(), name)
}

/// Full-matrix edit distance, kept deliberately naive.
fn oracle_distance(a: &[CanonToken], b: &[CanonToken]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

#[test]
fn lookalike_pair_is_high_and_resolves_to_different_addresses() {
    let a = norm_fixture("lookalike_a.sol");
    let b = norm_fixture("lookalike_b.sol");
    assert_eq!(a.tokens, b.tokens);
    let v = similarity_score(&a, &b);
    assert_eq!(v.level, SimilarityLevel::High);
    assert_eq!(v.score_num, v.score_den);

    let store = ImportStore::new();
    let resolve = |name: &str| {
        let u = parse_source(&contract_fixture(name)).unwrap();
        evaluate_address(&u, &find_transfer_sinks(&u)[0], &store).address.unwrap()
    };
    assert_eq!(resolve("lookalike_a.sol"), "0x2c1b6D43A52ea97d61979C22B7aa7B83352c1a2d".parse::<Address>().unwrap());
    assert_eq!(resolve("lookalike_b.sol"), "0x3c1a458adf7376a8b84e3c8ce352d43b1bcc9854".parse::<Address>().unwrap());
}

#[test]
fn frontrun_and_liquidity_bots_differ_substantially() {
    let a = norm_fixture("frontrun_bot.sol");
    let b = norm_fixture("liquidity_bot.sol");
    let d = oracle_distance(&a.tokens, &b.tokens);
    assert!(d * 10 > 3 * a.tokens.len().max(b.tokens.len()), "distance {d}");
    assert_eq!(similarity_score(&a, &b).level, SimilarityLevel::Low);
}

#[test]
fn find_similar_ranks_query_first() {
    let query = norm_fixture("fragmented_bot.sol");
    let corpus = vec![
        norm_fixture("frontrun_bot.sol"),
        norm_fixture("lookalike_b.sol"),
        NormalizedContract { source_id: "self".into(), tokens: query.tokens.clone() },
        norm_fixture("gated_bot.sol"),
    ];
    let hits = find_similar(&corpus, &query, SimilarityLevel::High);
    let ids: Vec<_> = hits.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(ids, vec!["lookalike_b.sol", "self"]);
    let unrelated = vec![norm_fixture("frontrun_bot.sol"), norm_fixture("gated_bot.sol")];
    assert!(find_similar(&unrelated, &query, SimilarityLevel::High).is_empty());
}

#[test]
fn ten_clones_all_high() {
    let query_src = synth::generate_contract(99, Address([7; 20]), &SynthOptions::default()).source;
    let query = normalize(&parse_source(&query_src).unwrap(), "query");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let corpus: Vec<_> = (0..10)
        .map(|i| {
            let src = synth::generate_contract(99, synth::random_address(&mut rng), &SynthOptions::default()).source;
            normalize(&parse_source(&src).unwrap(), format!("clone{i:02}"))
        })
        .collect();
    let hits = find_similar(&corpus, &query, SimilarityLevel::High);
    assert_eq!(hits.len(), 10);
    assert!(hits.iter().all(|(_, v)| v.score_num == v.score_den));
    let ids: Vec<_> = hits.iter().map(|(id, _)| id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

/// Reorders contract members and substitutes fresh tokens until at least
/// 30% of positions differ.
pub fn shuffled_variant(a: &NormalizedContract, src: &str, rng: &mut ChaCha8Rng) -> NormalizedContract {
    let mut unit = parse_source(src).unwrap();
    for item in unit.items.iter_mut() {
        if let SourceItem::Contract(c) = item {
            c.members.shuffle(rng);
        }
    }
    let mut b = normalize(&unit, "shuffled");
    let need = (a.tokens.len().max(b.tokens.len()) * 3).div_ceil(10);
    let mut fresh = 0;
    while oracle_distance(&a.tokens, &b.tokens) < need {
        let i = rng.gen_range(0..b.tokens.len());
        b.tokens[i] = CanonToken::Keyword(format!("fresh{fresh}"));
        fresh += 1;
    }
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn masking_invariance(seed in any::<u64>(), a1 in any::<[u8; 20]>(), a2 in any::<[u8; 20]>()) {
        let x = synth::generate_contract(seed, Address(a1), &SynthOptions::default());
        let y = synth::generate_contract(seed, Address(a2), &SynthOptions::default());
        let nx = normalize(&parse_source(&x.source).unwrap(), "x");
        let ny = normalize(&parse_source(&y.source).unwrap(), "y");
        let v = similarity_score(&nx, &ny);
        prop_assert_eq!(v.score_num, v.score_den);
        prop_assert_eq!(v.level, SimilarityLevel::High);
    }

    #[test]
    fn score_matches_oracle_and_is_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let x = synth::generate_contract(s1, Address([1; 20]), &SynthOptions::default());
        let y = synth::generate_contract(s2, Address([2; 20]), &SynthOptions::default());
        let nx = normalize(&parse_source(&x.source).unwrap(), "x");
        let ny = normalize(&parse_source(&y.source).unwrap(), "y");
        let v = similarity_score(&nx, &ny);
        prop_assert_eq!(v.differing_token_count as usize, oracle_distance(&nx.tokens, &ny.tokens));
        prop_assert_eq!(v, similarity_score(&ny, &nx));
        let self_score = similarity_score(&nx, &nx);
        prop_assert_eq!((self_score.score_num, self_score.level), (self_score.score_den, SimilarityLevel::High));
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = synth::random_subset_contract(&mut rng);
        let n = normalize(&parse_source(&src).unwrap(), "r");
        prop_assert_eq!(n.renormalize(), n.clone());
        prop_assert_eq!(normalize(&parse_source(&src).unwrap(), "r"), n);
    }

    #[test]
    fn successive_insertions_never_raise_the_score(seed in any::<u64>(), k in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = synth::generate_contract(seed, Address([3; 20]), &SynthOptions::default());
        let a = normalize(&parse_source(&c.source).unwrap(), "a");
        let mut b = a.clone();
        let mut last = similarity_score(&a, &b);
        for _ in 0..k {
            let pos = rng.gen_range(0..=b.tokens.len());
            let tok = CanonToken::Punct([";", "{", "+"][rng.gen_range(0..3)].to_string());
            b.tokens.insert(pos, tok);
            let now = similarity_score(&a, &b);
            prop_assert!(u128::from(now.score_num) * u128::from(last.score_den) <= u128::from(last.score_num) * u128::from(now.score_den));
            last = now;
        }
    }

    #[test]
    fn perfect_scores_are_transitive(seed in any::<u64>(), a1 in any::<[u8; 20]>(), a2 in any::<[u8; 20]>(), a3 in any::<[u8; 20]>()) {
        let n = |bytes: [u8; 20]| {
            let c = synth::generate_contract(seed, Address(bytes), &SynthOptions::default());
            normalize(&parse_source(&c.source).unwrap(), "n")
        };
        let (x, y, z) = (n(a1), n(a2), n(a3));
        let one = |v: SimilarityVerdict| v.score_num == v.score_den;
        if one(similarity_score(&x, &y)) && one(similarity_score(&y, &z)) {
            prop_assert!(one(similarity_score(&x, &z)));
        }
    }

    #[test]
    fn banded_distance_matches_oracle(a in proptest::collection::vec(0u8..4, 0..40), b in proptest::collection::vec(0u8..4, 0..40), k in 0usize..45) {
        let ta: Vec<CanonToken> = a.iter().map(|x| CanonToken::Keyword(x.to_string())).collect();
        let tb: Vec<CanonToken> = b.iter().map(|x| CanonToken::Keyword(x.to_string())).collect();
        let d = oracle_distance(&ta, &tb);
        prop_assert_eq!(levenshtein_within(&a, &b, k), (d <= k).then_some(d));
    }

    #[test]
    fn floor_search_equals_filtered_scores(seed in any::<u64>(), floor in 0u8..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let floor = [SimilarityLevel::Low, SimilarityLevel::Medium, SimilarityLevel::High][floor as usize];
        let query = synth::generate_contract(seed, Address([5; 20]), &SynthOptions::default());
        let q = normalize(&parse_source(&query.source).unwrap(), "q");
        let mut corpus = Vec::new();
        for i in 0..8 {
            let c = if rng.gen_bool(0.5) {
                synth::generate_contract(seed, Address([i; 20]), &SynthOptions::default()).source
            } else {
                synth::generate_contract(rng.gen(), Address([i; 20]), &SynthOptions::default()).source
            };
            let mut n = normalize(&parse_source(&c).unwrap(), format!("c{i}"));
            for _ in 0..rng.gen_range(0..6) {
                let at = rng.gen_range(0..=n.tokens.len());
                n.tokens.insert(at, CanonToken::Punct(";".into()));
            }
            corpus.push(n);
        }
        let hits = find_similar(&corpus, &q, floor);
        let mut expected: Vec<(String, SimilarityVerdict)> = corpus
            .iter()
            .map(|c| (c.source_id.clone(), similarity_score(&q, c)))
            .filter(|(_, v)| v.level >= floor)
            .collect();
        expected.sort_by(|(ia, va), (ib, vb)| {
            (u128::from(vb.score_num) * u128::from(va.score_den))
                .cmp(&(u128::from(va.score_num) * u128::from(vb.score_den)))
                .then_with(|| ia.cmp(ib))
        });
        prop_assert_eq!(hits, expected);
    }

    #[test]
    fn shuffled_pairs_are_not_high(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = synth::generate_contract(seed, Address([4; 20]), &SynthOptions::default());
        let a = normalize(&parse_source(&c.source).unwrap(), "a");
        let b = shuffled_variant(&a, &c.source, &mut rng);
        prop_assert_ne!(similarity_score(&a, &b).level, SimilarityLevel::High);
    }
}
