use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::loss::format_wei;
use crate::address::Address;
use crate::chain::{AccountKind, Chain, ChainError, ChainQuery, ChainTx};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowNode {
    pub address: Address,
    pub kind: AccountKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowEdge {
    pub from: Address,
    pub to: Address,
    pub total_wei: u128,
    pub tx_count: usize,
}

/// Value flows around one address; parallel transfers share one edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowGraph {
    pub center: Address,
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
}

impl FlowGraph {
    /// Builds the graph from the value-carrying txs among `txs` that touch
    /// `center`. `kind` labels each node.
    pub fn from_txs<'a>(
        center: Address,
        txs: impl IntoIterator<Item = &'a ChainTx>,
        mut kind: impl FnMut(&Address) -> AccountKind,
    ) -> Self {
        let mut edges: BTreeMap<(Address, Address), (u128, usize)> = BTreeMap::new();
        for tx in txs {
            if tx.value_wei == 0 || (tx.from != center && tx.to != center) {
                continue;
            }
            let e = edges.entry((tx.from, tx.to)).or_default();
            e.0 += tx.value_wei;
            e.1 += 1;
        }
        let mut addrs: Vec<Address> = vec![center];
        for (from, to) in edges.keys() {
            addrs.push(*from);
            addrs.push(*to);
        }
        addrs.sort();
        addrs.dedup();
        FlowGraph {
            center,
            nodes: addrs
                .into_iter()
                .map(|address| FlowNode {
                    kind: kind(&address),
                    address,
                })
                .collect(),
            edges: edges
                .into_iter()
                .map(|((from, to), (total_wei, tx_count))| FlowEdge {
                    from,
                    to,
                    total_wei,
                    tx_count,
                })
                .collect(),
        }
    }

    pub fn edge(&self, from: &Address, to: &Address) -> Option<&FlowEdge> {
        self.edges.iter().find(|e| e.from == *from && e.to == *to)
    }

    /// Graphviz rendering: contracts as boxes, EOAs as ellipses, the center
    /// address filled.
    pub fn to_dot(&self, coin: &str) -> String {
        let mut out = String::from("digraph money_flow {\n    rankdir=LR;\n");
        for n in &self.nodes {
            let shape = match n.kind {
                AccountKind::Contract => "box",
                AccountKind::Eoa => "ellipse",
                AccountKind::Unknown => "diamond",
            };
            let style = if n.address == self.center { ", style=filled, fillcolor=\"#f4cccc\"" } else { "" };
            let _ = writeln!(
                out,
                "    \"{}\" [label=\"{}\", shape={shape}{style}];",
                n.address.to_lower_hex(),
                n.address.abbreviated()
            );
        }
        for e in &self.edges {
            let amount = format_wei(&BigRational::from_integer(BigInt::from(e.total_wei)));
            let _ = writeln!(
                out,
                "    \"{}\" -> \"{}\" [label=\"{amount} {coin} ({} tx)\"];",
                e.from.to_lower_hex(),
                e.to.to_lower_hex(),
                e.tx_count
            );
        }
        out.push_str("}\n");
        out
    }
}

/// One-hop money flow around `address`.
pub fn money_flow_graph<Q: ChainQuery + ?Sized>(
    query: &Q,
    address: &Address,
    chain: &Chain,
) -> Result<FlowGraph, ChainError> {
    let txs = query.tx_history(address, chain)?;
    let mut kinds = BTreeMap::new();
    for tx in &txs {
        for a in [tx.from, tx.to] {
            if let std::collections::btree_map::Entry::Vacant(v) = kinds.entry(a) {
                v.insert(query.account_kind(&a, chain)?);
            }
        }
    }
    if !kinds.contains_key(address) {
        kinds.insert(*address, query.account_kind(address, chain)?);
    }
    Ok(FlowGraph::from_txs(*address, &txs, |a| {
        kinds.get(a).copied().unwrap_or(AccountKind::Unknown)
    }))
}
