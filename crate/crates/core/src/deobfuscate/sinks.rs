use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Branch, SinkSite, SiteLocator, SiteStep};
use crate::solidity::{Expression, SourceUnit, Statement};

/// Nested statement lists of `stmt` tagged with the branch that reaches them.
pub(crate) fn branches(stmt: &Statement) -> Vec<(Branch, &[Statement])> {
    match stmt {
        Statement::If { then_branch, else_branch, .. } => {
            let mut v = vec![(Branch::Then, then_branch.as_slice())];
            if let Some(e) = else_branch {
                v.push((Branch::Else, e.as_slice()));
            }
            v
        }
        Statement::For { init, body, .. } => {
            let mut v = Vec::new();
            if let Some(init) = init {
                v.push((Branch::Init, std::slice::from_ref(init.as_ref())));
            }
            v.push((Branch::Body, body.as_slice()));
            v
        }
        Statement::While { body, .. } => vec![(Branch::Body, body.as_slice())],
        Statement::Block(b) => vec![(Branch::Body, b.as_slice())],
        _ => Vec::new(),
    }
}

pub(crate) fn branch<'a>(stmt: &'a Statement, which: Branch) -> Option<&'a [Statement]> {
    branches(stmt).into_iter().find(|(b, _)| *b == which).map(|(_, s)| s)
}

/// `(receiver, amount)` when `e` is a one-argument `.transfer(…)` call.
pub(crate) fn as_transfer(e: &Expression) -> Option<(&Expression, &Expression)> {
    match e {
        Expression::Call { callee, args } if args.len() == 1 => match callee.as_ref() {
            Expression::Member { base, member } if member == "transfer" => Some((base, &args[0])),
            _ => None,
        },
        _ => None,
    }
}

/// Transfer calls owned directly by `stmt`, in source (pre-order) order.
pub(crate) fn transfers_in(stmt: &Statement) -> Vec<(&Expression, &Expression)> {
    let mut out = Vec::new();
    for e in stmt.own_expressions() {
        e.walk(&mut |x| {
            if let Some(t) = as_transfer(x) {
                out.push(t);
            }
        });
    }
    out
}

pub(crate) fn contains_transfer(stmt: &Statement) -> bool {
    !transfers_in(stmt).is_empty()
        || branches(stmt).iter().any(|(_, list)| list.iter().any(contains_transfer))
}

fn collect(
    stmts: &[Statement],
    steps: &mut Vec<SiteStep>,
    contract: &str,
    function: &str,
    out: &mut Vec<SinkSite>,
) {
    for (i, stmt) in stmts.iter().enumerate() {
        for (occurrence, (dest, amount)) in transfers_in(stmt).into_iter().enumerate() {
            out.push(SinkSite {
                contract: contract.to_string(),
                function: function.to_string(),
                site: SiteLocator { steps: steps.clone(), stmt: i, occurrence },
                dest_expr: dest.clone(),
                amount_expr: amount.clone(),
            });
        }
        for (branch, list) in branches(stmt) {
            steps.push(SiteStep { stmt: i, branch });
            collect(list, steps, contract, function, out);
            steps.pop();
        }
    }
}

/// All native-transfer call sites in the unit, in source order.
pub fn find_transfer_sinks(unit: &SourceUnit) -> Vec<SinkSite> {
    let mut out = Vec::new();
    for contract in unit.contracts() {
        for f in contract.functions() {
            if let Some(body) = &f.body {
                collect(body, &mut Vec::new(), &contract.name, &f.signature(), &mut out);
            }
        }
    }
    out
}

/// Sink-enclosing function signatures with the number of contracts using each.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SignatureCatalog(pub BTreeMap<String, usize>);

impl SignatureCatalog {
    pub fn contains(&self, signature: &str) -> bool {
        self.0.contains_key(signature)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, usize)> for SignatureCatalog {
    fn from_iter<T: IntoIterator<Item = (String, usize)>>(iter: T) -> Self {
        SignatureCatalog(iter.into_iter().collect())
    }
}

pub fn harvest_sink_signatures(corpus: &[SourceUnit]) -> SignatureCatalog {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for unit in corpus {
        let mut seen = BTreeSet::new();
        for sink in find_transfer_sinks(unit) {
            seen.insert((sink.contract, sink.function));
        }
        for (_, signature) in seen {
            *counts.entry(signature).or_default() += 1;
        }
    }
    SignatureCatalog(counts)
}
