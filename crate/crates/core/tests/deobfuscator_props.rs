use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scamlens_core::deobfuscate::*;
use scamlens_core::solidity::{emit_source, parse_source};
use scamlens_core::synth::{self, Assembly, Negative, SynthOptions, Trick};
use scamlens_core::Address;

fn options(trick: u8, assembly: u8, k: usize, gated: bool) -> SynthOptions {
    SynthOptions {
        trick: Some(if trick == 0 { Trick::Fragments } else { Trick::Import }),
        assembly: Some([Assembly::DecodeLoop, Assembly::AddressReturn, Assembly::HexNumbers][assembly as usize]),
        fragments: Some(k),
        threshold: Some(gated),
        negative: None,
    }
}

fn hex_chars_of_literals(sources: &[&str]) -> String {
    // every character appearing inside a string or hex literal, lowercased
    let mut out = String::new();
    for src in sources {
        for tok in scamlens_core::solidity::tokenize(src).unwrap() {
            match tok.kind {
                scamlens_core::solidity::TokenKind::Str(s) => out.push_str(&s),
                scamlens_core::solidity::TokenKind::Number(n) => out.push_str(&n),
                _ => {}
            }
        }
    }
    out.to_lowercase()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn planted_address_is_recovered(
        seed in any::<u64>(),
        bytes in any::<[u8; 20]>(),
        trick in 0u8..2,
        assembly in 0u8..3,
        k in 2usize..=8,
        gated in any::<bool>(),
    ) {
        let planted = Address(bytes);
        let c = synth::generate_contract(seed, planted, &options(trick, assembly, k, gated));
        let unit = parse_source(&c.source).unwrap();
        let store = c.import_store();
        let sinks = find_transfer_sinks(&unit);
        prop_assert!(!sinks.is_empty());
        let mut resolutions = Vec::new();
        for sink in &sinks {
            let res = evaluate_address(&unit, sink, &store);
            prop_assert_eq!(res.address, Some(planted), "{}\n{:?}", c.source, res);
            // resolved bytes come from literal text only
            let lits = hex_chars_of_literals(
                &std::iter::once(c.source.as_str()).chain(c.imports.iter().map(|(_, s)| s.as_str())).collect::<Vec<_>>(),
            );
            for ch in planted.to_lower_hex()[2..].chars() {
                prop_assert!(lits.contains(ch));
            }
            resolutions.push((sink.clone(), res));
        }
        let profile = classify_backdoor(&unit, &resolutions);
        match c.threshold_wei {
            Some(t) => {
                prop_assert_eq!(profile.kind, BackdoorKind::ThresholdGated);
                prop_assert_eq!(profile.threshold_wei, Some(t));
            }
            None => prop_assert_eq!(profile.kind, BackdoorKind::UnconditionalDrain),
        }
        resolutions.reverse();
        prop_assert_eq!(classify_backdoor(&unit, &resolutions), profile);
    }

    #[test]
    fn refund_negatives_are_never_resolved(seed in any::<u64>(), bytes in any::<[u8; 20]>(), owner in any::<bool>()) {
        let opts = SynthOptions {
            negative: Some(if owner { Negative::Owner } else { Negative::MsgSender }),
            ..Default::default()
        };
        let c = synth::generate_contract(seed, Address(bytes), &opts);
        let unit = parse_source(&c.source).unwrap();
        let store = c.import_store();
        for sink in find_transfer_sinks(&unit) {
            let res = evaluate_address(&unit, &sink, &store);
            prop_assert_eq!(res.status, ResolutionStatus::SkippedCallerRefund, "{}", c.source);
        }
    }

    #[test]
    fn sinks_match_text_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = synth::random_subset_contract(&mut rng);
        let unit = parse_source(&src).unwrap();
        prop_assert_eq!(find_transfer_sinks(&unit).len(), src.matches(".transfer(").count());
    }

    #[test]
    fn probe_agrees_with_sink(seed in any::<u64>(), bytes in any::<[u8; 20]>(), negative in 0u8..3) {
        let opts = SynthOptions {
            negative: [None, Some(Negative::Owner), Some(Negative::MsgSender)][negative as usize],
            ..Default::default()
        };
        let c = synth::generate_contract(seed, Address(bytes), &opts);
        let unit = parse_source(&c.source).unwrap();
        let store = c.import_store();
        for sink in find_transfer_sinks(&unit) {
            let probe = rewrite_with_probe(&unit, &sink).unwrap();
            let direct = evaluate_address(&unit, &sink, &store);
            let via = evaluate_probe(&probe, &store).unwrap();
            prop_assert_eq!((direct.status, direct.address, direct.reason), (via.status, via.address, via.reason));
        }
    }

    #[test]
    fn random_contracts_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = synth::random_subset_contract(&mut rng);
        let unit = parse_source(&src).unwrap();
        let again = parse_source(&emit_source(&unit)).unwrap();
        prop_assert_eq!(unit, again);
    }

    #[test]
    fn evaluation_never_panics_on_random_contracts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = synth::random_subset_contract(&mut rng);
        let unit = parse_source(&src).unwrap();
        let store = ImportStore::new();
        for sink in find_transfer_sinks(&unit) {
            let res = evaluate_address(&unit, &sink, &store);
            prop_assert_eq!(res.status == ResolutionStatus::Resolved, res.address.is_some());
        }
    }
}
