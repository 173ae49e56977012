use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::eval::assigned_names;
use super::imports::ImportStore;
use super::sinks::{branch, contains_transfer};
use super::{evaluate_address, AddressResolution, Branch, SinkSite, SiteLocator};
use crate::solidity::{
    emit_source, parse_source, ContractMember, Expression, FunctionDef, FunctionKind, Mutability, Param,
    SourceUnit, Statement, Visibility,
};

/// Name of the read-only function appended by [`rewrite_with_probe`].
pub const PROBE_FUNCTION: &str = "getAddress";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("destination depends on function parameter `{0}`")]
    ParameterReference(String),
    #[error("a statement before the sink moves funds")]
    TransferBeforeSink,
    #[error("sink {0} does not belong to this unit")]
    UnknownSink(String),
    #[error("rewritten source does not parse: {0}")]
    Reparse(String),
}

/// A contract rewritten with a probe function returning the sink's receiver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Probe {
    pub contract: String,
    pub function: String,
    pub text: String,
}

/// Statements that run before the sink on its path, flattened in order.
fn path_prefix<'u>(body: &'u [Statement], site: &SiteLocator) -> Option<Vec<&'u Statement>> {
    let mut out = Vec::new();
    let mut list = body;
    for step in &site.steps {
        out.extend(list.iter().take(step.stmt));
        let holder = list.get(step.stmt)?;
        if let (Statement::For { init: Some(init), .. }, Branch::Body) = (holder, step.branch) {
            out.push(init.as_ref());
        }
        list = branch(holder, step.branch)?;
    }
    out.extend(list.iter().take(site.stmt));
    Some(out)
}

fn probe_name(unit: &SourceUnit, contract: &str) -> String {
    let taken: BTreeSet<&str> = unit
        .contract(contract)
        .map(|c| c.functions().map(|f| f.name.as_str()).collect())
        .unwrap_or_default();
    if !taken.contains(PROBE_FUNCTION) {
        return PROBE_FUNCTION.to_string();
    }
    (1..).map(|i| format!("{PROBE_FUNCTION}{i}")).find(|n| !taken.contains(n.as_str())).expect("unbounded")
}

/// Appends a zero-argument view function to the sink's contract that
/// replays the statements leading to the sink and returns its receiver.
pub fn rewrite_with_probe(unit: &SourceUnit, sink: &SinkSite) -> Result<Probe, RewriteError> {
    let unknown = || RewriteError::UnknownSink(format!("{}::{} @ {}", sink.contract, sink.function, sink.site));
    let contract = unit.contract(&sink.contract).ok_or_else(unknown)?;
    let f = contract.functions().find(|f| f.signature() == sink.function).ok_or_else(unknown)?;
    let body = f.body.as_ref().ok_or_else(unknown)?;
    let prefix = path_prefix(body, &sink.site).ok_or_else(unknown)?;

    let mut lifted = Vec::new();
    for stmt in prefix {
        match stmt {
            // Bare calls have no effect on the values the probe returns.
            Statement::Expr(Expression::Call { .. }) => continue,
            s if contains_transfer(s) => return Err(RewriteError::TransferBeforeSink),
            s => lifted.push(s.clone()),
        }
    }

    let bound: BTreeSet<&str> = f.params.iter().chain(&f.returns).filter_map(|p| p.name.as_deref()).collect();
    let mut referenced: BTreeSet<String> = BTreeSet::new();
    for stmt in &lifted {
        collect_identifiers(stmt, &mut referenced);
    }
    for id in sink.dest_expr.identifiers() {
        referenced.insert(id.to_string());
    }
    if let Some(p) = referenced.iter().find(|id| bound.contains(id.as_str())) {
        return Err(RewriteError::ParameterReference(p.clone()));
    }

    let ret = match &sink.dest_expr {
        e @ Expression::PayableCast(_) => e.clone(),
        e => Expression::PayableCast(Box::new(e.clone())),
    };
    lifted.push(Statement::Return(Some(ret)));
    let name = probe_name(unit, &sink.contract);
    let probe = FunctionDef {
        kind: FunctionKind::Function,
        name: name.clone(),
        params: Vec::new(),
        visibility: Some(Visibility::Public),
        mutability: Some(Mutability::View),
        is_virtual: false,
        override_spec: None,
        modifiers: Vec::new(),
        returns: vec![Param { ty: "address".to_string(), location: None, name: None }],
        body: Some(lifted),
    };
    let mut rewritten = unit.clone();
    rewritten
        .contract_mut(&sink.contract)
        .expect("contract exists")
        .members
        .push(ContractMember::Function(probe));
    Ok(Probe { contract: sink.contract.clone(), function: name, text: emit_source(&rewritten) })
}

fn collect_identifiers(stmt: &Statement, out: &mut BTreeSet<String>) {
    for e in stmt.own_expressions() {
        out.extend(e.identifiers().into_iter().map(str::to_string));
    }
    if let Statement::For { init: Some(init), .. } = stmt {
        collect_identifiers(init, out);
    }
    if let Statement::Opaque(text) = stmt {
        // Opaque text may mention parameters; be conservative.
        let mut names = BTreeSet::new();
        assigned_names(std::slice::from_ref(stmt), &mut names);
        out.extend(names);
        out.extend(
            text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '$'))
                .filter(|w| !w.is_empty())
                .map(str::to_string),
        );
    }
    for child in stmt.children() {
        for s in child {
            collect_identifiers(s, out);
        }
    }
}

/// Re-parses a probe and evaluates the value its function returns, using the
/// same machinery as sink evaluation.
pub fn evaluate_probe(probe: &Probe, imports: &ImportStore) -> Result<AddressResolution, RewriteError> {
    let unit = parse_source(&probe.text).map_err(|e| RewriteError::Reparse(e.to_string()))?;
    let f = unit
        .contract(&probe.contract)
        .and_then(|c| c.function(&probe.function))
        .ok_or_else(|| RewriteError::UnknownSink(format!("{}::{}", probe.contract, probe.function)))?;
    let body = f.body.as_ref().ok_or_else(|| RewriteError::Reparse("probe has no body".into()))?;
    let (idx, dest) = body
        .iter()
        .enumerate()
        .find_map(|(i, s)| match s {
            Statement::Return(Some(e)) => Some((i, e.clone())),
            _ => None,
        })
        .ok_or_else(|| RewriteError::Reparse("probe has no return".into()))?;
    let sink = SinkSite {
        contract: probe.contract.clone(),
        function: f.signature(),
        site: SiteLocator { steps: Vec::new(), stmt: idx, occurrence: 0 },
        dest_expr: dest,
        amount_expr: Expression::Number { text: "0".into(), unit: None },
    };
    Ok(evaluate_address(&unit, &sink, imports))
}
