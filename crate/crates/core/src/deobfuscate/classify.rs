use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::eval::{Evaluator, Value};
use super::imports::ImportStore;
use super::sinks::branch;
use super::{AddressResolution, Branch, ResolutionStatus, SinkSite};
use crate::solidity::{BinaryOp, ContractDef, Expression, FunctionDef, SourceUnit, Statement, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BackdoorKind {
    UnconditionalDrain,
    ThresholdGated,
    RefundCapable,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BackdoorProfile {
    pub kind: BackdoorKind,
    /// Drains fire only when the balance exceeds this many wei.
    pub threshold_wei: Option<u128>,
    /// Some sink pays the caller or the deploying owner back.
    pub refund_capable: bool,
    pub sinks: Vec<SinkSite>,
}

const MAX_GUARD_DEPTH: usize = 8;

/// Conditions that must hold for control to reach the sink, paired with the
/// polarity under which they hold.
fn guards<'u>(unit: &'u SourceUnit, sink: &SinkSite) -> Vec<(&'u Expression, bool)> {
    let Some(body) = unit
        .contract(&sink.contract)
        .and_then(|c| c.functions().find(|f| f.signature() == sink.function))
        .and_then(|f| f.body.as_ref())
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut list: &[Statement] = body;
    for step in &sink.site.steps {
        let Some(holder) = list.get(step.stmt) else { break };
        match (holder, step.branch) {
            (Statement::If { cond, .. }, Branch::Then) => out.push((cond, true)),
            (Statement::If { cond, .. }, Branch::Else) => out.push((cond, false)),
            (Statement::While { cond, .. }, Branch::Body) => out.push((cond, true)),
            (Statement::For { cond: Some(cond), .. }, Branch::Body) => out.push((cond, true)),
            _ => {}
        }
        let Some(next) = branch(holder, step.branch) else { break };
        list = next;
    }
    out
}

struct GuardAnalyzer<'a> {
    unit: &'a SourceUnit,
    contract: &'a str,
    ev: Evaluator<'a>,
}

impl<'a> GuardAnalyzer<'a> {
    fn constant(&mut self, e: &Expression) -> Option<BigInt> {
        match self.ev.eval_constant(self.contract, e) {
            Ok(Value::Int { value, .. }) if value >= BigInt::zero() => Some(value),
            _ => None,
        }
    }

    fn helper(&self, name: &str) -> Option<&'a FunctionDef> {
        let contract: &ContractDef = self.unit.contract(self.contract)?;
        let mut pending = vec![contract];
        let mut seen = Vec::new();
        while let Some(c) = pending.pop() {
            if seen.contains(&c.name) {
                continue;
            }
            seen.push(c.name.clone());
            if let Some(f) = c.named_functions().find(|f| f.name == name && f.params.is_empty()) {
                return Some(f);
            }
            for base in &c.bases {
                let base = base.split('(').next().unwrap_or(base).trim();
                if let Some(b) = self.unit.contract(base) {
                    pending.push(b);
                }
            }
        }
        None
    }

    /// Condition `C` of a boolean helper written as `return C;` or
    /// `if (C) return true; else return false;`, with its polarity.
    fn helper_condition(f: &FunctionDef) -> Option<(&Expression, bool)> {
        let body = f.body.as_ref()?;
        let ret_bool = |stmts: &[Statement]| match stmts {
            [Statement::Return(Some(e))] => match e.unparen() {
                Expression::Bool(b) => Some(*b),
                _ => None,
            },
            _ => None,
        };
        match body.as_slice() {
            [Statement::Return(Some(c))] => Some((c, true)),
            [Statement::If { cond, then_branch, else_branch: Some(else_branch) }] => {
                let (t, e) = (ret_bool(then_branch)?, ret_bool(else_branch)?);
                (t != e).then_some((cond, t))
            }
            [Statement::If { cond, then_branch, else_branch: None }, rest @ ..] => {
                let t = ret_bool(then_branch)?;
                let e = ret_bool(rest)?;
                (t != e).then_some((cond, t))
            }
            _ => None,
        }
    }

    /// Largest `T` such that the guard holding implies `balance > T`.
    fn threshold(&mut self, cond: &Expression, positive: bool, depth: usize) -> Option<BigInt> {
        if depth > MAX_GUARD_DEPTH {
            return None;
        }
        match cond.unparen() {
            Expression::Unary { op: UnaryOp::Not, operand } => self.threshold(operand, !positive, depth + 1),
            Expression::Binary { op: op @ (BinaryOp::And | BinaryOp::Or), lhs, rhs } => {
                let l = self.threshold(lhs, positive, depth + 1);
                let r = self.threshold(rhs, positive, depth + 1);
                // A conjunction needs only one conjunct to bound the balance,
                // a disjunction needs both.
                let conjunction = (*op == BinaryOp::And) == positive;
                if conjunction {
                    l.into_iter().chain(r).max()
                } else {
                    Some(l?.min(r?))
                }
            }
            Expression::Binary { op, lhs, rhs } => {
                let is_balance = |e: &Expression| matches!(e.unparen(), Expression::ThisBalance { .. });
                // Normalize to `balance OP bound`.
                let (op, bound) = if is_balance(lhs) {
                    (*op, rhs)
                } else if is_balance(rhs) {
                    let flipped = match op {
                        BinaryOp::Lt => BinaryOp::Gt,
                        BinaryOp::Le => BinaryOp::Ge,
                        BinaryOp::Gt => BinaryOp::Lt,
                        BinaryOp::Ge => BinaryOp::Le,
                        _ => return None,
                    };
                    (flipped, lhs)
                } else {
                    return None;
                };
                let op = if positive {
                    op
                } else {
                    match op {
                        BinaryOp::Lt => BinaryOp::Ge,
                        BinaryOp::Le => BinaryOp::Gt,
                        BinaryOp::Gt => BinaryOp::Le,
                        BinaryOp::Ge => BinaryOp::Lt,
                        _ => return None,
                    }
                };
                let bound = self.constant(bound)?;
                match op {
                    BinaryOp::Gt => Some(bound),
                    BinaryOp::Ge if !bound.is_zero() => Some(bound - BigInt::one()),
                    _ => None,
                }
            }
            Expression::Call { callee, args } if args.is_empty() => {
                let Expression::Ident(name) = callee.as_ref() else { return None };
                let f = self.helper(name)?;
                let (inner, polarity) = Self::helper_condition(f)?;
                self.threshold(inner, positive == polarity, depth + 1)
            }
            _ => None,
        }
    }
}

fn is_zero_amount(analyzer: &mut GuardAnalyzer<'_>, amount: &Expression) -> bool {
    analyzer.constant(amount).is_some_and(|v| v.is_zero())
}

/// Classifies the unit's backdoor from its sink resolutions. Sinks that move
/// a constant zero amount are decoys and do not count as drains.
pub fn classify_backdoor(unit: &SourceUnit, resolutions: &[(SinkSite, AddressResolution)]) -> BackdoorProfile {
    let mut ordered: Vec<&(SinkSite, AddressResolution)> = resolutions.iter().collect();
    ordered.sort_by(|a, b| a.0.sort_key().cmp(&b.0.sort_key()));
    let store = ImportStore::new();

    let refund_capable = ordered.iter().any(|(_, r)| r.status == ResolutionStatus::SkippedCallerRefund);
    let mut unguarded = false;
    let mut threshold: Option<u128> = None;
    let mut drains = 0usize;
    for (sink, res) in &ordered {
        if res.status != ResolutionStatus::Resolved {
            continue;
        }
        let mut analyzer = GuardAnalyzer { unit, contract: &sink.contract, ev: Evaluator::new(unit, &store) };
        if is_zero_amount(&mut analyzer, &sink.amount_expr) {
            continue;
        }
        drains += 1;
        let bound = guards(unit, sink)
            .into_iter()
            .filter_map(|(cond, positive)| analyzer.threshold(cond, positive, 0))
            .max()
            .and_then(|b| b.to_u128());
        match bound {
            Some(t) => threshold = Some(threshold.map_or(t, |cur| cur.min(t))),
            None => unguarded = true,
        }
    }

    let (kind, threshold_wei) = if drains == 0 {
        (if refund_capable { BackdoorKind::RefundCapable } else { BackdoorKind::None }, None)
    } else if unguarded {
        (BackdoorKind::UnconditionalDrain, None)
    } else {
        (BackdoorKind::ThresholdGated, threshold)
    };
    BackdoorProfile {
        kind,
        threshold_wei,
        refund_capable,
        sinks: ordered.iter().map(|(s, _)| s.clone()).collect(),
    }
}
