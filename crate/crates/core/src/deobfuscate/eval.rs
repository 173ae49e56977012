//! Closed-world partial evaluator for the Solidity subset.
//!
//! Values that cannot be determined statically are carried as
//! [`Value::Unknown`] and only turn into an error when something actually
//! depends on them, so an unrelated unknown local does not spoil a sink.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::rc::Rc;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::imports::ImportStore;
use super::sinks::branch;
use super::{AddressResolution, Branch, SinkSite, UnresolvedReason};
use crate::address::Address;
use crate::solidity::{
    is_elementary_type, parse_source, tokenize, AssignOp, BinaryOp, ConcatStyle, ContractDef,
    Expression, FunctionDef, FunctionKind, SourceUnit, Statement, TokenKind, UnaryOp,
};

/// Total loop iterations allowed for one evaluation.
pub const LOOP_BOUND: usize = 10_000;
const MAX_CALL_DEPTH: usize = 64;
const TRACE_LIMIT: usize = 256;
const MAX_INT_BITS: u64 = 256;
const MAX_BYTES_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct EvalError {
    pub reason: UnresolvedReason,
    pub message: String,
}

type EResult<T> = Result<T, EvalError>;

fn non_constant(message: impl Into<String>) -> EvalError {
    EvalError { reason: UnresolvedReason::NonConstantExpression, message: message.into() }
}

fn unsupported(message: impl Into<String>) -> EvalError {
    EvalError { reason: UnresolvedReason::UnsupportedConstruct, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CallerKind {
    Sender,
    Owner,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Value {
    Str(Vec<u8>),
    Bytes(Vec<u8>),
    /// `hex_text` keeps the digits of a hex literal so that `string(0x50790)`
    /// can render them back as text.
    Int { value: BigInt, hex_text: Option<String> },
    Bool(bool),
    Address(Address),
    Caller(CallerKind),
    Contract { unit: usize, name: String },
    This,
    Unknown(EvalError),
}

impl Value {
    fn int(value: BigInt) -> Value {
        Value::Int { value, hex_text: None }
    }

    fn small(v: u64) -> Value {
        Value::int(BigInt::from(v))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn text(bytes: &[u8]) -> String {
            let s = String::from_utf8_lossy(bytes);
            if s.chars().count() > 48 {
                format!("{}…", s.chars().take(48).collect::<String>())
            } else {
                s.into_owned()
            }
        }
        match self {
            Value::Str(s) => write!(f, "{:?}", text(s)),
            Value::Bytes(b) => write!(f, "bytes({:?})", text(b)),
            Value::Int { value, .. } => write!(f, "{value}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Address(a) => write!(f, "{a}"),
            Value::Caller(CallerKind::Sender) => f.write_str("msg.sender"),
            Value::Caller(CallerKind::Owner) => f.write_str("owner"),
            Value::Contract { name, .. } => write!(f, "contract {name}"),
            Value::This => f.write_str("this"),
            Value::Unknown(e) => write!(f, "unknown ({})", e.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Ctx {
    unit: usize,
    contract: String,
}

enum Flow {
    Normal,
    Return(Value),
    Break,
    Continue,
}

struct Frame {
    ctx: Ctx,
    scopes: Vec<HashMap<String, Value>>,
    /// When set, `scopes[0]` holds the contract's state and assignments to
    /// undeclared names create state entries (constructor and sink frames).
    state_writable: bool,
}

impl Frame {
    fn new(ctx: Ctx) -> Self {
        Frame { ctx, scopes: vec![HashMap::new()], state_writable: false }
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn declare(&mut self, name: &str, value: Value) {
        self.scopes.last_mut().expect("scope").insert(name.to_string(), value);
    }

    /// Updates the innermost binding; `false` when the name is unbound.
    fn set(&mut self, name: &str, value: Value) -> bool {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = value;
                return true;
            }
        }
        false
    }

    fn set_or_declare(&mut self, name: &str, value: Value) {
        if !self.set(name, value.clone()) {
            self.declare(name, value);
        }
    }
}

pub(crate) struct Evaluator<'a> {
    imports: &'a ImportStore,
    units: Vec<Rc<SourceUnit>>,
    unit_by_url: HashMap<String, Result<usize, EvalError>>,
    states: HashMap<Ctx, Rc<HashMap<String, Value>>>,
    states_in_progress: HashSet<Ctx>,
    loops_left: usize,
    depth: usize,
    trace: Vec<String>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(unit: &SourceUnit, imports: &'a ImportStore) -> Self {
        Evaluator {
            imports,
            units: vec![Rc::new(unit.clone())],
            unit_by_url: HashMap::new(),
            states: HashMap::new(),
            states_in_progress: HashSet::new(),
            loops_left: LOOP_BOUND,
            depth: 0,
            trace: Vec::new(),
        }
    }

    fn note(&mut self, step: impl FnOnce() -> String) {
        if self.trace.len() < TRACE_LIMIT {
            self.trace.push(step());
        } else if self.trace.len() == TRACE_LIMIT {
            self.trace.push("… trace truncated".to_string());
        }
    }

    // ----- contracts and imports --------------------------------------

    fn load_import(&mut self, url: &str) -> Result<usize, EvalError> {
        if let Some(cached) = self.unit_by_url.get(url) {
            return cached.clone();
        }
        let result = match self.imports.get(url) {
            None => Err(EvalError {
                reason: UnresolvedReason::MissingImport,
                message: format!("import `{url}` is not in the snapshot store"),
            }),
            Some(text) => match parse_source(text) {
                Ok(unit) => {
                    self.units.push(Rc::new(unit));
                    Ok(self.units.len() - 1)
                }
                Err(e) => Err(EvalError {
                    reason: UnresolvedReason::ParseFailure,
                    message: format!("import `{url}`: {e}"),
                }),
            },
        };
        if result.is_ok() {
            let url_owned = url.to_string();
            self.note(|| format!("loaded import {url_owned}"));
        }
        self.unit_by_url.insert(url.to_string(), result.clone());
        result
    }

    /// Finds the unit defining contract `name`, searching `unit` and then its
    /// imports breadth-first.
    fn locate_contract(&mut self, unit: usize, name: &str) -> EResult<usize> {
        let mut queue = VecDeque::from([unit]);
        let mut visited = BTreeSet::from([unit]);
        let mut first_err = None;
        while let Some(u) = queue.pop_front() {
            let current = self.units[u].clone();
            if current.contract(name).is_some() {
                return Ok(u);
            }
            for import in current.imports() {
                match self.load_import(&import.path) {
                    Ok(next) => {
                        if visited.insert(next) {
                            queue.push_back(next);
                        }
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
        }
        Err(first_err.unwrap_or_else(|| non_constant(format!("contract `{name}` is not defined"))))
    }

    fn contract(&self, ctx: &Ctx) -> Option<(Rc<SourceUnit>, usize)> {
        let unit = self.units[ctx.unit].clone();
        let idx = unit.contracts().position(|c| c.name == ctx.contract)?;
        Some((unit, idx))
    }

    fn with_contract<T>(&self, ctx: &Ctx, f: impl FnOnce(&ContractDef) -> T) -> Option<T> {
        let (unit, idx) = self.contract(ctx)?;
        let c = unit.contracts().nth(idx)?;
        Some(f(c))
    }

    /// The contract followed by its bases, depth-first, without repeats.
    fn linearize(&mut self, ctx: &Ctx) -> Vec<Ctx> {
        let mut out = Vec::new();
        let mut stack = vec![ctx.clone()];
        while let Some(c) = stack.pop() {
            if out.contains(&c) || out.len() > 64 {
                continue;
            }
            let Some(bases) = self.with_contract(&c, |def| def.bases.clone()) else { continue };
            out.push(c.clone());
            for base in bases.iter().rev() {
                let name = base.split('(').next().unwrap_or(base).trim();
                let name = name.rsplit('.').next().unwrap_or(name).to_string();
                if let Ok(u) = self.locate_contract(c.unit, &name) {
                    stack.push(Ctx { unit: u, contract: name });
                }
            }
        }
        out
    }

    fn find_function(&mut self, ctx: &Ctx, name: &str, argc: usize) -> Option<(Ctx, FunctionDef)> {
        for c in self.linearize(ctx) {
            let found = self.with_contract(&c, |def| {
                def.named_functions()
                    .find(|f| f.name == name && f.params.len() == argc && f.body.is_some())
                    .cloned()
            });
            if let Some(Some(f)) = found {
                return Some((c, f));
            }
        }
        None
    }

    // ----- contract state ---------------------------------------------

    fn state_of(&mut self, ctx: &Ctx) -> EResult<Rc<HashMap<String, Value>>> {
        if let Some(s) = self.states.get(ctx) {
            return Ok(s.clone());
        }
        if !self.states_in_progress.insert(ctx.clone()) {
            return Err(unsupported(format!("cyclic state initialization in `{}`", ctx.contract)));
        }
        let state = self.compute_state(ctx);
        self.states_in_progress.remove(ctx);
        let state = Rc::new(state);
        self.states.insert(ctx.clone(), state.clone());
        Ok(state)
    }

    fn compute_state(&mut self, ctx: &Ctx) -> HashMap<String, Value> {
        let chain: Vec<Ctx> = self.linearize(ctx).into_iter().rev().collect();
        let mut frame = Frame::new(ctx.clone());
        frame.state_writable = true;
        let mut written_elsewhere: BTreeSet<(String, String)> = BTreeSet::new();

        for c in &chain {
            frame.ctx = c.clone();
            let Some(vars) = self.with_contract(c, |def| def.state_vars().cloned().collect::<Vec<_>>())
            else {
                continue;
            };
            for var in vars {
                let value = match &var.init {
                    Some(init) => {
                        self.eval(&mut frame, init).unwrap_or_else(Value::Unknown)
                    }
                    None => self.state_default(c, &var.ty, &var.name),
                };
                frame.scopes[0].insert(var.name.clone(), value);
            }
        }
        for c in &chain {
            frame.ctx = c.clone();
            let Some(fns) = self.with_contract(c, |def| def.functions().cloned().collect::<Vec<_>>())
            else {
                continue;
            };
            for f in fns {
                let Some(body) = &f.body else { continue };
                if f.kind == FunctionKind::Constructor {
                    frame.scopes.push(HashMap::new());
                    for p in &f.params {
                        if let Some(name) = &p.name {
                            frame.declare(name, Value::Unknown(non_constant(format!("constructor argument `{name}`"))));
                        }
                    }
                    for stmt in body {
                        self.exec_lenient(&mut frame, stmt);
                    }
                    frame.scopes.pop();
                } else {
                    let mut locals: HashSet<&str> =
                        f.params.iter().chain(&f.returns).filter_map(|p| p.name.as_deref()).collect();
                    declared_locals(body, &mut locals);
                    let mut targets = BTreeSet::new();
                    assigned_names(body, &mut targets);
                    for t in targets {
                        if !locals.contains(t.as_str()) {
                            written_elsewhere.insert((t, f.signature()));
                        }
                    }
                }
            }
        }

        let mut state = std::mem::take(&mut frame.scopes[0]);
        for v in state.values_mut() {
            if *v == Value::Caller(CallerKind::Sender) {
                *v = Value::Caller(CallerKind::Owner);
            }
        }
        for (name, signature) in written_elsewhere {
            if state.contains_key(&name) {
                state.insert(
                    name.clone(),
                    Value::Unknown(non_constant(format!("state variable `{name}` is modified by {signature}"))),
                );
            }
        }
        state
    }

    fn state_default(&mut self, ctx: &Ctx, ty: &str, name: &str) -> Value {
        if let Some(v) = default_value(ty) {
            return v;
        }
        let head = ty.split_whitespace().next().unwrap_or(ty);
        if head.starts_with("address") {
            return Value::Unknown(non_constant(format!("state variable `{name}` is never assigned")));
        }
        if !is_elementary_type(head) && !ty.contains(['(', '[']) && !head.starts_with("mapping") {
            let short = head.rsplit('.').next().unwrap_or(head);
            return match self.locate_contract(ctx.unit, short) {
                Ok(unit) => Value::Contract { unit, name: short.to_string() },
                Err(e) => Value::Unknown(e),
            };
        }
        Value::Unknown(unsupported(format!("state variable `{name}` of type `{ty}`")))
    }

    // ----- statements -------------------------------------------------

    /// Executes a statement whose failure must not abort the caller: on
    /// error the frame is restored and every name the statement assigns
    /// becomes unknown.
    fn exec_lenient(&mut self, frame: &mut Frame, stmt: &Statement) {
        match stmt {
            Statement::Expr(Expression::Call { .. }) => {}
            Statement::Opaque(text) => {
                for name in opaque_identifiers(text) {
                    if frame.lookup(&name).is_some() {
                        frame.set(&name, Value::Unknown(unsupported(format!("`{name}` touched by `{}`", clip(text)))));
                    }
                }
            }
            _ => {
                let snapshot = frame.scopes.clone();
                if let Err(e) = self.exec(frame, stmt) {
                    frame.scopes = snapshot;
                    let mut names = BTreeSet::new();
                    assigned_names(std::slice::from_ref(stmt), &mut names);
                    for name in names {
                        frame.set_or_declare(&name, Value::Unknown(e.clone()));
                    }
                }
            }
        }
    }

    fn exec_block(&mut self, frame: &mut Frame, stmts: &[Statement]) -> EResult<Flow> {
        frame.scopes.push(HashMap::new());
        let mut flow = Ok(Flow::Normal);
        for stmt in stmts {
            match self.exec(frame, stmt) {
                Ok(Flow::Normal) => {}
                other => {
                    flow = other;
                    break;
                }
            }
        }
        frame.scopes.pop();
        flow
    }

    fn tick(&mut self) -> EResult<()> {
        if self.loops_left == 0 {
            return Err(unsupported(format!("loop iteration bound of {LOOP_BOUND} exceeded")));
        }
        self.loops_left -= 1;
        Ok(())
    }

    fn exec(&mut self, frame: &mut Frame, stmt: &Statement) -> EResult<Flow> {
        match stmt {
            Statement::VarDecl { ty, name, init, .. } => {
                let value = match init {
                    Some(e) => self.eval(frame, e)?,
                    None => default_value(ty).unwrap_or_else(|| {
                        Value::Unknown(unsupported(format!("default value of `{ty}`")))
                    }),
                };
                frame.declare(name, value);
                Ok(Flow::Normal)
            }
            Statement::Expr(e) => {
                if let Expression::Call { callee, args } = e {
                    if let Expression::Ident(name) = callee.as_ref() {
                        if name == "require" || name == "assert" {
                            let ok = self.eval(frame, &args[0])?;
                            return match ok {
                                Value::Bool(true) => Ok(Flow::Normal),
                                Value::Bool(false) => Err(unsupported(format!("{name} fails"))),
                                other => Err(unsupported(format!("{name} on {other}"))),
                            };
                        }
                        if name == "revert" {
                            return Err(unsupported("revert"));
                        }
                    }
                }
                self.eval(frame, e)?;
                Ok(Flow::Normal)
            }
            Statement::If { cond, then_branch, else_branch } => match self.eval_bool(frame, cond)? {
                true => self.exec_block(frame, then_branch),
                false => match else_branch {
                    Some(b) => self.exec_block(frame, b),
                    None => Ok(Flow::Normal),
                },
            },
            Statement::For { init, cond, update, body } => {
                frame.scopes.push(HashMap::new());
                let result = self.exec_for(frame, init.as_deref(), cond.as_ref(), update.as_ref(), body);
                frame.scopes.pop();
                result
            }
            Statement::While { cond, body } => {
                loop {
                    if !self.eval_bool(frame, cond)? {
                        return Ok(Flow::Normal);
                    }
                    self.tick()?;
                    match self.exec_block(frame, body)? {
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Break => return Ok(Flow::Normal),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            Statement::Return(None) => Ok(Flow::Return(Value::Unknown(unsupported("empty return")))),
            Statement::Return(Some(e)) => Ok(Flow::Return(self.eval(frame, e)?)),
            Statement::Block(stmts) => self.exec_block(frame, stmts),
            Statement::Opaque(text) => match text.trim() {
                "break;" => Ok(Flow::Break),
                "continue;" => Ok(Flow::Continue),
                other => Err(unsupported(format!("statement `{}`", clip(other)))),
            },
        }
    }

    fn exec_for(
        &mut self,
        frame: &mut Frame,
        init: Option<&Statement>,
        cond: Option<&Expression>,
        update: Option<&Expression>,
        body: &[Statement],
    ) -> EResult<Flow> {
        if let Some(init) = init {
            self.exec(frame, init)?;
        }
        loop {
            if let Some(c) = cond {
                if !self.eval_bool(frame, c)? {
                    return Ok(Flow::Normal);
                }
            }
            self.tick()?;
            match self.exec_block(frame, body)? {
                Flow::Return(v) => return Ok(Flow::Return(v)),
                Flow::Break => return Ok(Flow::Normal),
                Flow::Normal | Flow::Continue => {}
            }
            if let Some(u) = update {
                self.eval(frame, u)?;
            }
        }
    }

    // ----- expressions ------------------------------------------------

    fn eval_bool(&mut self, frame: &mut Frame, e: &Expression) -> EResult<bool> {
        match self.eval(frame, e)? {
            Value::Bool(b) => Ok(b),
            other => Err(unsupported(format!("condition evaluated to {other}"))),
        }
    }

    fn known(v: Value) -> EResult<Value> {
        match v {
            Value::Unknown(e) => Err(e),
            v => Ok(v),
        }
    }

    fn eval(&mut self, frame: &mut Frame, e: &Expression) -> EResult<Value> {
        let v = self.eval_inner(frame, e)?;
        Self::known(v)
    }

    fn eval_inner(&mut self, frame: &mut Frame, e: &Expression) -> EResult<Value> {
        match e {
            Expression::StringLit(s) => Ok(Value::Str(s.as_bytes().to_vec())),
            Expression::HexStringLit(s) => decode_hex_string(s).map(Value::Bytes),
            Expression::Number { text, unit } => {
                let value = parse_number(text, unit.as_deref())?;
                let hex_text = text
                    .strip_prefix("0x")
                    .or_else(|| text.strip_prefix("0X"))
                    .filter(|_| unit.is_none())
                    .map(|h| h.replace('_', ""));
                Ok(Value::Int { value, hex_text })
            }
            Expression::AddressLit(text) => text
                .parse::<Address>()
                .map(Value::Address)
                .map_err(|e| unsupported(e.to_string())),
            Expression::Bool(b) => Ok(Value::Bool(*b)),
            Expression::Ident(name) => self.lookup_ident(frame, name),
            Expression::MsgSender => Ok(Value::Caller(CallerKind::Sender)),
            Expression::ThisBalance { .. } => Err(non_constant("contract balance")),
            Expression::Member { base, member } => self.eval_member(frame, base, member),
            Expression::Index { base, index } => {
                let Some(index) = index else { return Err(unsupported("empty index")) };
                let b = self.eval(frame, base)?;
                let i = self.eval(frame, index)?;
                let data = match &b {
                    Value::Str(d) | Value::Bytes(d) => d,
                    other => return Err(unsupported(format!("indexing {other}"))),
                };
                let i = as_usize(&i)?;
                data.get(i)
                    .map(|byte| Value::small(u64::from(*byte)))
                    .ok_or_else(|| unsupported(format!("index {i} out of bounds (length {})", data.len())))
            }
            Expression::Call { callee, args } => self.eval_call(frame, callee, args),
            Expression::Concat { style, parts } => {
                let mut out = Vec::new();
                for p in parts {
                    match self.eval(frame, p)? {
                        Value::Str(d) | Value::Bytes(d) => out.extend(d),
                        Value::Address(a) => out.extend(a.0),
                        Value::Bool(b) => out.push(u8::from(b)),
                        other => return Err(unsupported(format!("packing {other} of unknown width"))),
                    }
                }
                check_len(&out)?;
                Ok(match style {
                    ConcatStyle::StringConcat => Value::Str(out),
                    ConcatStyle::EncodePacked | ConcatStyle::BytesConcat => Value::Bytes(out),
                })
            }
            Expression::PayableCast(inner) | Expression::AddressCast(inner) => {
                let v = self.eval(frame, inner)?;
                to_address(v)
            }
            Expression::TypeCast { ty, arg } => {
                let v = self.eval(frame, arg)?;
                cast(ty, v)
            }
            Expression::Unary { op, operand } => match op {
                UnaryOp::Not => Ok(Value::Bool(!self.eval_bool(frame, operand)?)),
                UnaryOp::Neg => {
                    let v = self.eval(frame, operand)?;
                    Ok(Value::int(-as_int(&v)?))
                }
                UnaryOp::BitNot => {
                    let v = self.eval(frame, operand)?;
                    let n = as_int(&v)?;
                    if n.is_negative() {
                        return Err(unsupported("bitwise not of a negative value"));
                    }
                    let max = (BigInt::one() << MAX_INT_BITS) - 1;
                    Ok(Value::int(max - n))
                }
                UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec => {
                    let Expression::Ident(name) = operand.unparen() else {
                        return Err(unsupported("increment of a non-variable"));
                    };
                    let old = as_int(&self.lookup_ident(frame, name).and_then(Self::known)?)?;
                    let delta = if matches!(op, UnaryOp::PreInc | UnaryOp::PostInc) { 1 } else { -1 };
                    let new = &old + BigInt::from(delta);
                    self.assign(frame, name, Value::int(new.clone()))?;
                    Ok(Value::int(if matches!(op, UnaryOp::PreInc | UnaryOp::PreDec) { new } else { old }))
                }
            },
            Expression::Binary { op, lhs, rhs } => match op {
                BinaryOp::And => Ok(Value::Bool(self.eval_bool(frame, lhs)? && self.eval_bool(frame, rhs)?)),
                BinaryOp::Or => Ok(Value::Bool(self.eval_bool(frame, lhs)? || self.eval_bool(frame, rhs)?)),
                _ => {
                    let l = self.eval(frame, lhs)?;
                    let r = self.eval(frame, rhs)?;
                    binary(*op, l, r)
                }
            },
            Expression::Assign { op, target, value } => {
                let Expression::Ident(name) = target.unparen() else {
                    return Err(unsupported(format!("assignment to `{}`", crate::solidity::emit_expression(target))));
                };
                let rhs = self.eval(frame, value)?;
                let new = match op {
                    AssignOp::Assign => rhs,
                    _ => {
                        let old = self.lookup_ident(frame, name).and_then(Self::known)?;
                        let bop = match op {
                            AssignOp::Add => BinaryOp::Add,
                            AssignOp::Sub => BinaryOp::Sub,
                            AssignOp::Mul => BinaryOp::Mul,
                            AssignOp::Div => BinaryOp::Div,
                            AssignOp::Mod => BinaryOp::Mod,
                            AssignOp::Assign => unreachable!(),
                        };
                        binary(bop, old, rhs)?
                    }
                };
                self.assign(frame, name, new.clone())?;
                Ok(new)
            }
            Expression::Ternary { cond, then, otherwise } => {
                if self.eval_bool(frame, cond)? {
                    self.eval(frame, then)
                } else {
                    self.eval(frame, otherwise)
                }
            }
            Expression::Paren(inner) => self.eval(frame, inner),
        }
    }

    fn assign(&mut self, frame: &mut Frame, name: &str, value: Value) -> EResult<()> {
        if frame.set(name, value.clone()) {
            return Ok(());
        }
        if frame.state_writable {
            frame.scopes[0].insert(name.to_string(), value);
            return Ok(());
        }
        Err(unsupported(format!("write to state variable `{name}` from a read-only function")))
    }

    fn lookup_ident(&mut self, frame: &mut Frame, name: &str) -> EResult<Value> {
        if let Some(v) = frame.lookup(name) {
            return Ok(v.clone());
        }
        if !frame.state_writable {
            let state = self.state_of(&frame.ctx)?;
            if let Some(v) = state.get(name) {
                return Ok(v.clone());
            }
        }
        match name {
            "this" => return Ok(Value::This),
            "now" => return Err(non_constant("block timestamp")),
            _ => {}
        }
        if self.with_contract(&frame.ctx, |_| ()).is_some() {
            if let Ok(unit) = self.locate_contract(frame.ctx.unit, name) {
                return Ok(Value::Contract { unit, name: name.to_string() });
            }
        }
        Err(non_constant(format!("`{name}` is not a known constant")))
    }

    fn eval_member(&mut self, frame: &mut Frame, base: &Expression, member: &str) -> EResult<Value> {
        if let Expression::Ident(b) = base {
            if frame.lookup(b).is_none() {
                match (b.as_str(), member) {
                    ("tx", "origin") => return Ok(Value::Caller(CallerKind::Sender)),
                    ("msg" | "block" | "tx", _) => return Err(non_constant(format!("{b}.{member}"))),
                    _ => {}
                }
            }
        }
        let v = self.eval(frame, base)?;
        match (&v, member) {
            (Value::Str(d) | Value::Bytes(d), "length") => Ok(Value::small(d.len() as u64)),
            (Value::Address(_) | Value::This, "balance") => Err(non_constant("account balance")),
            _ => Err(unsupported(format!("member `{member}` of {v}"))),
        }
    }

    fn eval_args(&mut self, frame: &mut Frame, args: &[Expression]) -> EResult<Vec<Value>> {
        args.iter().map(|a| self.eval(frame, a)).collect()
    }

    fn eval_call(&mut self, frame: &mut Frame, callee: &Expression, args: &[Expression]) -> EResult<Value> {
        match callee {
            Expression::Ident(name) => {
                if let Some(v) = frame.lookup(name) {
                    return Err(unsupported(format!("call through variable `{name}` ({v})")));
                }
                match name.as_str() {
                    "keccak256" | "sha256" | "ripemd160" | "ecrecover" | "blockhash" | "gasleft" => {
                        return Err(unsupported(format!("builtin `{name}`")));
                    }
                    "require" | "assert" | "revert" => {
                        return Err(unsupported(format!("`{name}` used as a value")));
                    }
                    _ => {}
                }
                let ctx = frame.ctx.clone();
                if let Some((fctx, f)) = self.find_function(&ctx, name, args.len()) {
                    let values = self.eval_args(frame, args)?;
                    return self.call(fctx, &f, values);
                }
                if args.len() == 1 {
                    if let Ok(unit) = self.locate_contract(ctx.unit, name) {
                        let target = self.eval(frame, &args[0])?;
                        return match target {
                            Value::Address(_) | Value::Contract { .. } | Value::This => {
                                Ok(Value::Contract { unit, name: name.clone() })
                            }
                            other => Err(unsupported(format!("`{name}({other})`"))),
                        };
                    }
                }
                Err(non_constant(format!("call to undefined function `{name}`")))
            }
            Expression::Member { base, member } => {
                let target = match base.as_ref() {
                    Expression::Ident(b) if b == "this" && frame.lookup("this").is_none() => {
                        Ctx { unit: frame.ctx.unit, contract: frame.ctx.contract.clone() }
                    }
                    Expression::Ident(b) if matches!(b.as_str(), "abi" | "super") && frame.lookup(b).is_none() => {
                        return Err(unsupported(format!("`{b}.{member}`")));
                    }
                    _ => match self.eval(frame, base)? {
                        Value::Contract { unit, name } => Ctx { unit, contract: name },
                        other => return Err(unsupported(format!("call of `{member}` on {other}"))),
                    },
                };
                if let Some((fctx, f)) = self.find_function(&target, member, args.len()) {
                    let values = self.eval_args(frame, args)?;
                    return self.call(fctx, &f, values);
                }
                if args.is_empty() {
                    let state = self.state_of(&target)?;
                    if let Some(v) = state.get(member) {
                        let v = Self::known(v.clone())?;
                        let (c, m) = (target.contract.clone(), member.to_string());
                        let shown = v.to_string();
                        self.note(|| format!("{c}.{m}() -> {shown}"));
                        return Ok(v);
                    }
                }
                Err(non_constant(format!("`{}` has no function `{member}`", target.contract)))
            }
            other => Err(unsupported(format!("call of `{}`", crate::solidity::emit_expression(other)))),
        }
    }

    fn call(&mut self, ctx: Ctx, f: &FunctionDef, args: Vec<Value>) -> EResult<Value> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(unsupported("call depth limit reached"));
        }
        let body = f.body.as_ref().expect("callable functions have bodies");
        let mut frame = Frame::new(ctx.clone());
        for (p, v) in f.params.iter().zip(args) {
            if let Some(name) = &p.name {
                frame.declare(name, v);
            }
        }
        for r in &f.returns {
            if let Some(name) = &r.name {
                let v = default_value(&r.ty)
                    .unwrap_or_else(|| Value::Unknown(unsupported(format!("default value of `{}`", r.ty))));
                frame.declare(name, v);
            }
        }
        self.depth += 1;
        let flow = self.exec_block(&mut frame, body);
        self.depth -= 1;
        let result = match flow? {
            Flow::Return(v) => v,
            _ => match f.returns.first().and_then(|r| r.name.as_ref()) {
                Some(name) => frame.lookup(name).cloned().unwrap_or_else(|| Value::Unknown(unsupported("missing return"))),
                None => Value::Unknown(unsupported(format!("`{}` returns nothing", f.name))),
            },
        };
        let result = Self::known(result)?;
        let result = match f.returns.first() {
            Some(r) if f.returns.len() == 1 && r.ty.starts_with("address") => match result {
                Value::Str(ref s) if parse_address_text(s).is_some() => {
                    Value::Address(parse_address_text(s).expect("checked"))
                }
                other => other,
            },
            _ => result,
        };
        let shown = result.to_string();
        let name = f.name.clone();
        self.note(|| format!("{name}() -> {shown}"));
        Ok(result)
    }

    // ----- entry points -----------------------------------------------

    /// Evaluates `expr` in the context of `contract` with no locals.
    pub(crate) fn eval_constant(&mut self, contract: &str, expr: &Expression) -> EResult<Value> {
        let mut frame = Frame::new(Ctx { unit: 0, contract: contract.to_string() });
        self.eval(&mut frame, expr)
    }

    /// Runs the sink's function up to the sink and evaluates its receiver.
    pub(crate) fn eval_sink(&mut self, sink: &SinkSite) -> EResult<Value> {
        let ctx = Ctx { unit: 0, contract: sink.contract.clone() };
        let unit = self.units[0].clone();
        let f = unit
            .contract(&sink.contract)
            .and_then(|c| c.functions().find(|f| f.signature() == sink.function))
            .ok_or_else(|| unsupported(format!("sink function {}::{} not found", sink.contract, sink.function)))?;
        let body = f.body.as_ref().ok_or_else(|| unsupported("sink function has no body"))?;

        let state = self.state_of(&ctx)?;
        let mut frame = Frame::new(ctx);
        frame.scopes[0] = (*state).clone();
        frame.state_writable = true;
        frame.scopes.push(HashMap::new());
        for p in f.params.iter().chain(&f.returns) {
            if let Some(name) = &p.name {
                frame.declare(name, Value::Unknown(non_constant(format!("function parameter `{name}`"))));
            }
        }

        let mut list: &[Statement] = body;
        for step in &sink.site.steps {
            for stmt in list.iter().take(step.stmt) {
                self.exec_lenient(&mut frame, stmt);
            }
            let holder = list.get(step.stmt).ok_or_else(|| unsupported("stale sink locator"))?;
            frame.scopes.push(HashMap::new());
            if let (Statement::For { init: Some(init), .. }, Branch::Body) = (holder, step.branch) {
                self.exec_lenient(&mut frame, init);
            }
            list = branch(holder, step.branch).ok_or_else(|| unsupported("stale sink locator"))?;
        }
        for stmt in list.iter().take(sink.site.stmt) {
            self.exec_lenient(&mut frame, stmt);
        }
        let v = self.eval(&mut frame, &sink.dest_expr)?;
        let shown = v.to_string();
        self.note(|| format!("destination -> {shown}"));
        Ok(v)
    }

    pub(crate) fn into_trace(self) -> Vec<String> {
        self.trace
    }
}

/// Statically evaluates the receiver of `sink`.
pub fn evaluate_address(unit: &SourceUnit, sink: &SinkSite, imports: &ImportStore) -> AddressResolution {
    let mut ev = Evaluator::new(unit, imports);
    let outcome = ev.eval_sink(sink).and_then(to_address);
    let trace = ev.into_trace();
    match outcome {
        Ok(Value::Address(a)) => AddressResolution::resolved(a, trace),
        Ok(Value::Caller(CallerKind::Sender)) => AddressResolution::caller_refund(trace, "destination is msg.sender"),
        Ok(Value::Caller(CallerKind::Owner)) => {
            AddressResolution::caller_refund(trace, "destination is the deploying owner")
        }
        Ok(Value::This) => AddressResolution::unresolved(
            UnresolvedReason::NonConstantExpression,
            "destination is the contract itself",
            trace,
        ),
        Ok(Value::Contract { name, .. }) => AddressResolution::unresolved(
            UnresolvedReason::NonConstantExpression,
            format!("destination is the deployed address of `{name}`"),
            trace,
        ),
        Ok(other) => AddressResolution::unresolved(
            UnresolvedReason::UnsupportedConstruct,
            format!("destination evaluated to {other}"),
            trace,
        ),
        Err(e) => AddressResolution::unresolved(e.reason, e.message, trace),
    }
}

// ----- value helpers --------------------------------------------------

fn clip(text: &str) -> String {
    let one_line: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if one_line.chars().count() > 40 {
        format!("{}…", one_line.chars().take(40).collect::<String>())
    } else {
        one_line
    }
}

fn check_len(d: &[u8]) -> EResult<()> {
    if d.len() > MAX_BYTES_LEN {
        return Err(unsupported("byte string too long"));
    }
    Ok(())
}

fn check_bits(n: BigInt) -> EResult<Value> {
    if n.bits() > MAX_INT_BITS {
        return Err(unsupported("arithmetic overflow"));
    }
    Ok(Value::int(n))
}

fn as_int(v: &Value) -> EResult<BigInt> {
    match v {
        Value::Int { value, .. } => Ok(value.clone()),
        other => Err(unsupported(format!("expected an integer, got {other}"))),
    }
}

fn as_usize(v: &Value) -> EResult<usize> {
    as_int(v)?.to_usize().ok_or_else(|| unsupported(format!("bad index {v}")))
}

/// `0x` + 40 hex digits.
fn parse_address_text(s: &[u8]) -> Option<Address> {
    std::str::from_utf8(s).ok()?.parse().ok()
}

pub(crate) fn default_value(ty: &str) -> Option<Value> {
    let head = ty.split_whitespace().next().unwrap_or(ty);
    if head.contains('[') {
        return None;
    }
    if head.starts_with("uint") || head.starts_with("int") {
        return Some(Value::small(0));
    }
    match head {
        "bool" => Some(Value::Bool(false)),
        "string" => Some(Value::Str(Vec::new())),
        "bytes" => Some(Value::Bytes(Vec::new())),
        "address" => Some(Value::Address(Address::ZERO)),
        _ => None,
    }
}

fn decode_hex_string(s: &str) -> EResult<Vec<u8>> {
    let digits: Vec<u8> = s.bytes().filter(|b| *b != b'_').collect();
    if digits.len() % 2 != 0 {
        return Err(unsupported("odd-length hex literal"));
    }
    digits
        .chunks(2)
        .map(|pair| {
            std::str::from_utf8(pair)
                .ok()
                .and_then(|p| u8::from_str_radix(p, 16).ok())
                .ok_or_else(|| unsupported("bad hex literal"))
        })
        .collect()
}

fn unit_multiplier(unit: &str) -> Option<u64> {
    Some(match unit {
        "wei" | "seconds" => 1,
        "gwei" => 1_000_000_000,
        "szabo" => 1_000_000_000_000,
        "finney" => 1_000_000_000_000_000,
        "ether" => 1_000_000_000_000_000_000,
        "minutes" => 60,
        "hours" => 3_600,
        "days" => 86_400,
        "weeks" => 604_800,
        _ => return None,
    })
}

pub(crate) fn parse_number(text: &str, unit: Option<&str>) -> EResult<BigInt> {
    let clean = text.replace('_', "");
    let bad = || unsupported(format!("numeric literal `{text}`"));
    let (mut mantissa, mut scale) = if let Some(hex) = clean.strip_prefix("0x").or_else(|| clean.strip_prefix("0X")) {
        (BigInt::parse_bytes(hex.as_bytes(), 16).ok_or_else(bad)?, 0i64)
    } else {
        let (num, exp) = match clean.split_once(['e', 'E']) {
            Some((n, e)) => (n, e.parse::<i64>().map_err(|_| bad())?),
            None => (clean.as_str(), 0),
        };
        let (int_part, frac) = num.split_once('.').unwrap_or((num, ""));
        let digits = format!("{int_part}{frac}");
        let m = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        (m, exp - frac.len() as i64)
    };
    if let Some(u) = unit {
        let mult = unit_multiplier(u).ok_or_else(bad)?;
        mantissa *= mult;
    }
    if scale.abs() > 256 {
        return Err(bad());
    }
    while scale > 0 {
        mantissa *= 10;
        scale -= 1;
    }
    while scale < 0 {
        if !(&mantissa % 10u32).is_zero() {
            return Err(unsupported(format!("fractional literal `{text}`")));
        }
        mantissa /= 10;
        scale += 1;
    }
    Ok(mantissa)
}

fn int_width(ty: &str, prefix: &str) -> Option<u64> {
    let rest = ty.strip_prefix(prefix)?;
    if rest.is_empty() {
        return Some(256);
    }
    let n: u64 = rest.parse().ok()?;
    (n % 8 == 0 && (8..=256).contains(&n)).then_some(n)
}

fn wrap_unsigned(n: &BigInt, bits: u64) -> BigInt {
    let modulus = BigInt::one() << bits;
    ((n % &modulus) + &modulus) % &modulus
}

fn cast(ty: &str, v: Value) -> EResult<Value> {
    if let Some(bits) = int_width(ty, "uint") {
        let n = match &v {
            Value::Int { value, .. } => value.clone(),
            Value::Address(a) => BigInt::from_bytes_be(Sign::Plus, &a.0),
            Value::Bytes(d) if d.len() * 8 <= bits as usize => BigInt::from_bytes_be(Sign::Plus, d),
            other => return Err(unsupported(format!("{ty}({other})"))),
        };
        return Ok(Value::int(wrap_unsigned(&n, bits)));
    }
    if let Some(bits) = int_width(ty, "int") {
        let n = as_int(&v)?;
        let w = wrap_unsigned(&n, bits);
        let half = BigInt::one() << (bits - 1);
        return Ok(Value::int(if w >= half { w - (BigInt::one() << bits) } else { w }));
    }
    match (ty, v) {
        ("string", Value::Str(d) | Value::Bytes(d)) => Ok(Value::Str(d)),
        ("string", Value::Int { hex_text: Some(h), .. }) => Ok(Value::Str(h.into_bytes())),
        ("bytes", Value::Str(d) | Value::Bytes(d)) => Ok(Value::Bytes(d)),
        ("bytes1", Value::Int { value, .. }) if value >= BigInt::zero() && value < BigInt::from(256) => {
            Ok(Value::int(value))
        }
        ("bool", Value::Bool(b)) => Ok(Value::Bool(b)),
        (_, other) => Err(unsupported(format!("{ty}({other})"))),
    }
}

fn to_address(v: Value) -> EResult<Value> {
    match v {
        Value::Address(_) | Value::Caller(_) | Value::This | Value::Contract { .. } => Ok(v),
        Value::Int { value, .. } => {
            if value.is_negative() || value.bits() > 160 {
                return Err(unsupported(format!("address({value}) out of range")));
            }
            let (_, mut bytes) = value.to_bytes_be();
            if bytes.len() < 20 {
                let mut padded = vec![0u8; 20 - bytes.len()];
                padded.extend(bytes);
                bytes = padded;
            }
            Ok(Value::Address(Address::from_slice(&bytes).expect("20 bytes")))
        }
        Value::Str(ref s) => match parse_address_text(s) {
            Some(a) => Ok(Value::Address(a)),
            None => Err(unsupported(format!("address({v})"))),
        },
        Value::Bytes(ref d) if d.len() == 20 => Ok(Value::Address(Address::from_slice(d).expect("20 bytes"))),
        other => Err(unsupported(format!("address({other})"))),
    }
}

fn binary(op: BinaryOp, l: Value, r: Value) -> EResult<Value> {
    use BinaryOp::*;
    match (op, &l, &r) {
        (Add, Value::Str(a) | Value::Bytes(a), Value::Str(b) | Value::Bytes(b)) => {
            let mut out = a.clone();
            out.extend(b);
            check_len(&out)?;
            return Ok(Value::Str(out));
        }
        (Eq | Ne, _, _) if !matches!((&l, &r), (Value::Int { .. }, Value::Int { .. })) => {
            let same = match (&l, &r) {
                (Value::Str(a) | Value::Bytes(a), Value::Str(b) | Value::Bytes(b)) => a == b,
                (Value::Bool(a), Value::Bool(b)) => a == b,
                (Value::Address(a), Value::Address(b)) => a == b,
                _ => return Err(non_constant(format!("comparison of {l} and {r}"))),
            };
            return Ok(Value::Bool(if op == Eq { same } else { !same }));
        }
        _ => {}
    }
    let a = as_int(&l)?;
    let b = as_int(&r)?;
    let small_shift = |n: &BigInt| n.to_u64().filter(|s| *s <= MAX_INT_BITS).ok_or_else(|| unsupported("shift too large"));
    match op {
        Add => check_bits(a + b),
        Sub => check_bits(a - b),
        Mul => check_bits(a * b),
        Div | Mod if b.is_zero() => Err(unsupported("division by zero")),
        Div => Ok(Value::int(a / b)),
        Mod => Ok(Value::int(a % b)),
        Pow => {
            let e = b.to_u32().filter(|e| *e <= MAX_INT_BITS as u32).ok_or_else(|| unsupported("exponent too large"))?;
            if a.bits() * u64::from(e) > MAX_INT_BITS * 2 {
                return Err(unsupported("arithmetic overflow"));
            }
            check_bits(num_traits::pow(a, e as usize))
        }
        Lt => Ok(Value::Bool(a < b)),
        Le => Ok(Value::Bool(a <= b)),
        Gt => Ok(Value::Bool(a > b)),
        Ge => Ok(Value::Bool(a >= b)),
        Eq => Ok(Value::Bool(a == b)),
        Ne => Ok(Value::Bool(a != b)),
        BitAnd | BitOr | BitXor if a.is_negative() || b.is_negative() => {
            Err(unsupported("bitwise operation on a negative value"))
        }
        BitAnd => Ok(Value::int(a & b)),
        BitOr => Ok(Value::int(a | b)),
        BitXor => Ok(Value::int(a ^ b)),
        Shl => check_bits(wrap_unsigned(&(a << small_shift(&b)?), MAX_INT_BITS)),
        Shr => Ok(Value::int(a >> small_shift(&b)?)),
        And | Or => unreachable!("short-circuit operators are handled by the caller"),
    }
}

// ----- syntactic helpers ------------------------------------------------

fn assign_targets(e: &Expression, out: &mut BTreeSet<String>) {
    e.walk(&mut |x| match x {
        Expression::Assign { target, .. } => {
            if let Expression::Ident(n) = target.unparen() {
                out.insert(n.clone());
            }
        }
        Expression::Unary {
            op: UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec,
            operand,
        } => {
            if let Expression::Ident(n) = operand.unparen() {
                out.insert(n.clone());
            }
        }
        _ => {}
    });
}

/// Names declared or assigned anywhere in `stmts`, including names written
/// by opaque statements (`x = …` token patterns).
pub(crate) fn assigned_names(stmts: &[Statement], out: &mut BTreeSet<String>) {
    for stmt in stmts {
        match stmt {
            Statement::VarDecl { name, .. } => {
                out.insert(name.clone());
            }
            Statement::Opaque(text) => out.extend(opaque_assignments(text)),
            _ => {}
        }
        for e in stmt.own_expressions() {
            assign_targets(e, out);
        }
        if let Statement::For { init: Some(init), .. } = stmt {
            assigned_names(std::slice::from_ref(init.as_ref()), out);
        }
        for child in stmt.children() {
            assigned_names(child, out);
        }
    }
}

fn declared_locals<'s>(stmts: &'s [Statement], out: &mut HashSet<&'s str>) {
    for stmt in stmts {
        if let Statement::VarDecl { name, .. } = stmt {
            out.insert(name);
        }
        if let Statement::For { init: Some(init), .. } = stmt {
            declared_locals(std::slice::from_ref(init.as_ref()), out);
        }
        for child in stmt.children() {
            declared_locals(child, out);
        }
    }
}

fn opaque_identifiers(text: &str) -> Vec<String> {
    tokenize(text)
        .map(|toks| {
            toks.into_iter()
                .filter_map(|t| match t.kind {
                    TokenKind::Ident(s) => Some(s),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default()
}

fn opaque_assignments(text: &str) -> Vec<String> {
    let Ok(toks) = tokenize(text) else { return Vec::new() };
    let is_write = |k: &TokenKind| {
        matches!(k, TokenKind::Punct("=" | "+=" | "-=" | "*=" | "/=" | "%=" | "|=" | "&=" | "^=" | "<<=" | ">>=" | "++" | "--"))
    };
    let mut out = Vec::new();
    for (i, pair) in toks.windows(2).enumerate() {
        if !is_write(&pair[1].kind) {
            continue;
        }
        match &pair[0].kind {
            TokenKind::Ident(name) => out.push(name.clone()),
            // `(a, b) = …` writes every name inside the tuple.
            TokenKind::Punct(")") => {
                let mut depth = 0usize;
                for tok in toks[..=i].iter().rev() {
                    match &tok.kind {
                        TokenKind::Punct(")") => depth += 1,
                        TokenKind::Punct("(") => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        TokenKind::Ident(name) if depth == 1 => out.push(name.clone()),
                        _ => {}
                    }
                }
            }
            _ => {}
        }
    }
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_in(src: &str, expr: &str) -> EResult<Value> {
        let unit = parse_source(&format!("contract T {{ {src} function probe__() public view {{ {expr}; }} }}")).unwrap();
        let f = unit.contract("T").unwrap().function("probe__").unwrap();
        let Statement::Expr(e) = &f.body.as_ref().unwrap()[0] else { panic!("not an expression") };
        let store = ImportStore::new();
        Evaluator::new(&unit, &store).eval_constant("T", e)
    }

    #[test]
    fn number_literals() {
        assert_eq!(parse_number("1e18", None).unwrap(), BigInt::from(10u64.pow(18)));
        assert_eq!(parse_number("0.1", Some("ether")).unwrap(), BigInt::from(10u64.pow(17)));
        assert_eq!(parse_number("0xD6466", None).unwrap(), BigInt::from(0xD6466));
        assert_eq!(parse_number("1_000", None).unwrap(), BigInt::from(1000));
        assert!(parse_number("0.5", None).is_err());
    }

    #[test]
    fn casts_wrap_like_the_evm() {
        assert_eq!(eval_in("", "uint8(300)").unwrap(), Value::small(44));
        assert_eq!(eval_in("", "int8(255)").unwrap(), Value::int(BigInt::from(-1)));
        assert_eq!(
            eval_in("", "address(1)").unwrap(),
            Value::Address("0x0000000000000000000000000000000000000001".parse().unwrap())
        );
    }

    #[test]
    fn string_plus_and_hex_text() {
        assert_eq!(eval_in("", "string(0x50790) + string(0xc99f7)").unwrap(), Value::Str(b"50790c99f7".to_vec()));
    }

    #[test]
    fn loops_respect_the_bound() {
        let err = eval_in(
            "function spin() internal pure returns (uint) { uint i = 0; while (true) { i++; } return i; }",
            "spin()",
        )
        .unwrap_err();
        assert_eq!(err.reason, UnresolvedReason::UnsupportedConstruct);
        assert!(err.message.contains("10000"));
        let ok = eval_in(
            "function count() internal pure returns (uint n) { for (uint i = 0; i < 9999; i++) { n += 1; } }",
            "count()",
        );
        assert_eq!(ok.unwrap(), Value::small(9999));
    }

    #[test]
    fn overflow_is_unsupported() {
        let err = eval_in(
            "function grow() internal pure returns (uint x) { x = 2; for (uint i = 0; i < 20; i++) { x = x * x; } }",
            "grow()",
        )
        .unwrap_err();
        assert_eq!(err.reason, UnresolvedReason::UnsupportedConstruct);
    }

    #[test]
    fn state_written_by_setter_is_not_constant() {
        let err = eval_in(
            "address target = 0x2c1b6D43A52ea97d61979C22B7aa7B83352c1a2d; function set(address a) public { target = a; }",
            "target",
        )
        .unwrap_err();
        assert_eq!(err.reason, UnresolvedReason::NonConstantExpression);
    }

    #[test]
    fn opaque_assignment_detection() {
        assert_eq!(opaque_assignments("(a, b) = f(); c += 1;"), vec!["a".to_string(), "b".to_string(), "c".to_string()]);
    }
}
