use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::store::{ChainError, ChainQuery};
use super::{Chain, DeployedContract, TxKind};
use crate::address::Address;
use crate::deobfuscate::SignatureCatalog;
use crate::similarity::{find_similar_with, normalize, NormalizedContract, SimilarityLevel, Thresholds};
use crate::solidity::parse_source;

pub const MAX_EXPANSION_ROUNDS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum ExpansionDecision {
    Accepted { recipient: Address },
    /// Value left the contract towards more than one address.
    MultipleRecipients { recipients: Vec<Address> },
    /// An outgoing flow was triggered by a function outside the catalog.
    SignatureNotInCatalog { signature: Option<String> },
    NoOutgoingFlows,
    /// A victim contract could not be used as a similarity query.
    SkippedNoSource,
    SkippedParseFailure { message: String },
    /// A similar corpus entry that is not a contract address on this chain.
    SkippedNotDeployed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionAudit {
    pub round: usize,
    /// Contract address, or the corpus id for entries that are not addresses.
    pub candidate: String,
    /// The victim contract whose source matched, if any.
    pub similar_to: Option<Address>,
    /// Similarity in basis points, rounded down.
    pub score_bps: Option<u64>,
    #[serde(flatten)]
    pub decision: ExpansionDecision,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExpansionReport {
    pub new_addresses: BTreeSet<Address>,
    pub victim_contracts: BTreeSet<Address>,
    pub audit: Vec<ExpansionAudit>,
    pub rounds: usize,
    /// Set when the round cap stopped iteration before a fixpoint.
    pub capped: bool,
}

impl ExpansionReport {
    pub fn accepted_for(&self, recipient: &Address) -> impl Iterator<Item = &str> {
        let recipient = *recipient;
        self.audit.iter().filter_map(move |a| match a.decision {
            ExpansionDecision::Accepted { recipient: r } if r == recipient => Some(a.candidate.as_str()),
            _ => None,
        })
    }
}

/// Checks the two acceptance conditions on a candidate's outgoing value flows.
fn verify<Q: ChainQuery + ?Sized>(
    query: &Q,
    contract: &Address,
    chain: &Chain,
    catalog: &SignatureCatalog,
) -> Result<ExpansionDecision, ChainError> {
    let outgoing: Vec<_> = query
        .tx_history(contract, chain)?
        .into_iter()
        .filter(|tx| tx.kind == TxKind::Internal && tx.from == *contract && tx.value_wei > 0)
        .collect();
    let recipients: BTreeSet<Address> = outgoing.iter().map(|tx| tx.to).collect();
    if recipients.is_empty() {
        return Ok(ExpansionDecision::NoOutgoingFlows);
    }
    if recipients.len() > 1 {
        return Ok(ExpansionDecision::MultipleRecipients {
            recipients: recipients.into_iter().collect(),
        });
    }
    if let Some(tx) = outgoing.iter().find(|tx| {
        !tx.call_signature
            .as_deref()
            .is_some_and(|s| catalog.contains(s))
    }) {
        return Ok(ExpansionDecision::SignatureNotInCatalog {
            signature: tx.call_signature.clone(),
        });
    }
    Ok(ExpansionDecision::Accepted {
        recipient: *recipients.iter().next().expect("non-empty"),
    })
}

fn normalize_contract(c: &DeployedContract) -> Result<NormalizedContract, ExpansionDecision> {
    let Some(source) = &c.source else {
        return Err(ExpansionDecision::SkippedNoSource);
    };
    parse_source(source)
        .map(|unit| normalize(&unit, c.address.to_lower_hex()))
        .map_err(|e| ExpansionDecision::SkippedParseFailure {
            message: e.to_string(),
        })
}

/// Grows `seeds` by following victim contracts to similar contracts that
/// drain to a single recipient through catalogued functions, repeating on
/// each newly found recipient until nothing changes.
///
/// The candidate pool is `corpus` plus every contract with source on `chain`.
pub fn expand_addresses<Q: ChainQuery + ?Sized>(
    query: &Q,
    chain: &Chain,
    seeds: &BTreeSet<Address>,
    corpus: &[NormalizedContract],
    catalog: &SignatureCatalog,
) -> Result<ExpansionReport, ChainError> {
    expand_addresses_with(query, chain, seeds, corpus, catalog, &Thresholds::default())
}

/// [`expand_addresses`] with explicit similarity thresholds.
pub fn expand_addresses_with<Q: ChainQuery + ?Sized>(
    query: &Q,
    chain: &Chain,
    seeds: &BTreeSet<Address>,
    corpus: &[NormalizedContract],
    catalog: &SignatureCatalog,
    thresholds: &Thresholds,
) -> Result<ExpansionReport, ChainError> {
    let mut report = ExpansionReport::default();
    if seeds.is_empty() {
        return Ok(report);
    }

    let mut pool: Vec<NormalizedContract> = corpus.to_vec();
    let known_ids: BTreeSet<String> = pool.iter().map(|c| c.source_id.clone()).collect();
    let deployed: Vec<NormalizedContract> = query
        .contracts(chain)?
        .par_iter()
        .filter(|c| !known_ids.contains(&c.address.to_lower_hex()))
        .filter_map(|c| normalize_contract(c).ok())
        .collect();
    pool.extend(deployed);

    let mut known: BTreeSet<Address> = seeds.clone();
    let mut frontier: BTreeSet<Address> = seeds.clone();
    let mut queried: BTreeSet<Address> = BTreeSet::new();
    let mut evaluated: BTreeSet<String> = BTreeSet::new();

    while !frontier.is_empty() {
        if report.rounds == MAX_EXPANSION_ROUNDS {
            report.capped = true;
            break;
        }
        report.rounds += 1;
        let round = report.rounds;

        // Step 1: victim contracts draining to the frontier.
        let mut victims = BTreeMap::new();
        for scam in &frontier {
            for c in query.contracts_draining_to(scam, chain)? {
                if queried.insert(c.address) {
                    victims.insert(c.address, c);
                }
            }
        }
        report.victim_contracts.extend(victims.keys().copied());

        // Step 2: similar contracts for each victim contract source.
        let searches: Vec<(Address, Result<Vec<_>, ExpansionDecision>)> = victims
            .par_iter()
            .map(|(addr, c)| {
                let hits = normalize_contract(c)
                    .map(|q| find_similar_with(&pool, &q, SimilarityLevel::High, thresholds));
                (*addr, hits)
            })
            .collect();

        let mut candidates: BTreeMap<String, (Address, u64)> = BTreeMap::new();
        for (victim, hits) in searches {
            match hits {
                Err(decision) => report.audit.push(ExpansionAudit {
                    round,
                    candidate: victim.to_lower_hex(),
                    similar_to: None,
                    score_bps: None,
                    decision,
                }),
                Ok(hits) => {
                    for (id, verdict) in hits {
                        if evaluated.contains(&id) {
                            continue;
                        }
                        let bps = verdict.score_num * 10_000 / verdict.score_den;
                        let entry = candidates.entry(id).or_insert((victim, bps));
                        if bps > entry.1 {
                            *entry = (victim, bps);
                        }
                    }
                }
            }
        }

        // Step 3: verify each candidate's outgoing flows.
        let checked: Vec<(String, Address, u64, Result<ExpansionDecision, ChainError>)> = candidates
            .into_par_iter()
            .map(|(id, (victim, bps))| {
                let decision = match id.parse::<Address>() {
                    Ok(addr) => match query.contract(&addr, chain) {
                        Ok(Some(_)) => verify(query, &addr, chain, catalog),
                        Ok(None) => Ok(ExpansionDecision::SkippedNotDeployed),
                        Err(e) => Err(e),
                    },
                    Err(_) => Ok(ExpansionDecision::SkippedNotDeployed),
                };
                (id, victim, bps, decision)
            })
            .collect();

        let mut next = BTreeSet::new();
        for (id, victim, bps, decision) in checked {
            let decision = decision?;
            evaluated.insert(id.clone());
            if let ExpansionDecision::Accepted { recipient } = decision {
                if let Ok(addr) = id.parse::<Address>() {
                    report.victim_contracts.insert(addr);
                }
                if known.insert(recipient) {
                    report.new_addresses.insert(recipient);
                    next.insert(recipient);
                }
            }
            report.audit.push(ExpansionAudit {
                round,
                candidate: id,
                similar_to: Some(victim),
                score_bps: Some(bps),
                decision,
            });
        }
        frontier = next;
    }
    Ok(report)
}
