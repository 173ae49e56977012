//! Syntax tree for the Solidity subset found in arbitrage-bot contracts.
//!
//! Nodes carry no source positions, so two trees compare equal exactly when
//! they are structurally equal. Constructs outside the subset are kept as
//! [`Statement::Opaque`] / [`ContractMember::Opaque`] / [`SourceItem::Opaque`]
//! holding the verbatim source slice.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SourceUnit {
    pub items: Vec<SourceItem>,
    #[serde(skip)]
    pub raw_text: String,
}

impl PartialEq for SourceUnit {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Eq for SourceUnit {}

impl SourceUnit {
    /// Version constraint of the first `pragma solidity` directive.
    pub fn pragma(&self) -> Option<&str> {
        self.items.iter().find_map(|item| match item {
            SourceItem::Pragma(text) => text.strip_prefix("solidity ").map(str::trim),
            _ => None,
        })
    }

    pub fn imports(&self) -> impl Iterator<Item = &ImportDirective> {
        self.items.iter().filter_map(|item| match item {
            SourceItem::Import(i) => Some(i),
            _ => None,
        })
    }

    pub fn contracts(&self) -> impl Iterator<Item = &ContractDef> {
        self.items.iter().filter_map(|item| match item {
            SourceItem::Contract(c) => Some(c),
            _ => None,
        })
    }

    pub fn contract(&self, name: &str) -> Option<&ContractDef> {
        self.contracts().find(|c| c.name == name)
    }

    pub fn contract_mut(&mut self, name: &str) -> Option<&mut ContractDef> {
        self.items.iter_mut().find_map(|item| match item {
            SourceItem::Contract(c) if c.name == name => Some(c),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SourceItem {
    /// Everything between `pragma` and `;`, tokens joined by single spaces.
    Pragma(String),
    Import(ImportDirective),
    Contract(ContractDef),
    Opaque(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportDirective {
    pub path: String,
    pub form: ImportForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ImportForm {
    /// `import "p";` or `import "p" as X;`
    Plain { alias: Option<String> },
    /// `import * as X from "p";`
    Wildcard { alias: String },
    /// `import {A, B as C} from "p";` with the braces' contents normalized.
    Symbols(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContractKind {
    Contract,
    AbstractContract,
    Interface,
    Library,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractDef {
    pub kind: ContractKind,
    pub name: String,
    pub bases: Vec<String>,
    pub members: Vec<ContractMember>,
}

impl ContractDef {
    pub fn state_vars(&self) -> impl Iterator<Item = &StateVar> {
        self.members.iter().filter_map(|m| match m {
            ContractMember::StateVar(v) => Some(v),
            _ => None,
        })
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.members.iter().filter_map(|m| match m {
            ContractMember::Function(f) => Some(f),
            _ => None,
        })
    }

    /// Regular named functions, excluding constructor/receive/fallback.
    pub fn named_functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.functions()
            .filter(|f| f.kind == FunctionKind::Function)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.named_functions().find(|f| f.name == name)
    }

    pub fn constructor(&self) -> Option<&FunctionDef> {
        self.functions()
            .find(|f| f.kind == FunctionKind::Constructor)
    }

    pub fn state_var(&self, name: &str) -> Option<&StateVar> {
        self.state_vars().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ContractMember {
    StateVar(StateVar),
    Function(FunctionDef),
    Opaque(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateVar {
    pub ty: String,
    /// `public`, `constant`, `immutable`, … in source order.
    pub attributes: Vec<String>,
    pub name: String,
    pub init: Option<Expression>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionKind {
    Function,
    Constructor,
    Receive,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Visibility {
    Public,
    Private,
    Internal,
    External,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Private => "private",
            Visibility::Internal => "internal",
            Visibility::External => "external",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mutability {
    Payable,
    Pure,
    View,
}

impl Mutability {
    pub fn as_str(self) -> &'static str {
        match self {
            Mutability::Payable => "payable",
            Mutability::Pure => "pure",
            Mutability::View => "view",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Param {
    pub ty: String,
    /// `memory`, `storage` or `calldata`.
    pub location: Option<String>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionDef {
    pub kind: FunctionKind,
    /// Empty for constructor/receive/fallback.
    pub name: String,
    pub params: Vec<Param>,
    pub visibility: Option<Visibility>,
    pub mutability: Option<Mutability>,
    pub is_virtual: bool,
    /// `override` or `override(A, B)` as written (normalized spacing).
    pub override_spec: Option<String>,
    /// Custom modifier invocations, e.g. `onlyOwner`.
    pub modifiers: Vec<String>,
    pub returns: Vec<Param>,
    /// `None` for declarations without a body (interfaces, abstract).
    pub body: Option<Vec<Statement>>,
}

impl FunctionDef {
    /// ABI-style signature text, e.g. `start()` or `WITHDRAW_FUNDS(address)`.
    pub fn signature(&self) -> String {
        let name = match self.kind {
            FunctionKind::Function => self.name.as_str(),
            FunctionKind::Constructor => "constructor",
            FunctionKind::Receive => "receive",
            FunctionKind::Fallback => "fallback",
        };
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| canonical_abi_type(&p.ty))
            .collect();
        format!("{name}({})", params.join(","))
    }

    pub fn is_pure_or_view(&self) -> bool {
        matches!(
            self.mutability,
            Some(Mutability::Pure) | Some(Mutability::View)
        )
    }
}

fn canonical_abi_type(ty: &str) -> String {
    let base = ty.strip_suffix(" payable").unwrap_or(ty);
    let (head, dims) = match base.find('[') {
        Some(i) => (&base[..i], &base[i..]),
        None => (base, ""),
    };
    let head = match head {
        "uint" => "uint256",
        "int" => "int256",
        "byte" => "bytes1",
        other => other,
    };
    format!("{head}{dims}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Statement {
    VarDecl {
        ty: String,
        location: Option<String>,
        name: String,
        init: Option<Expression>,
    },
    Expr(Expression),
    If {
        cond: Expression,
        then_branch: Vec<Statement>,
        else_branch: Option<Vec<Statement>>,
    },
    For {
        init: Option<Box<Statement>>,
        cond: Option<Expression>,
        update: Option<Expression>,
        body: Vec<Statement>,
    },
    While {
        cond: Expression,
        body: Vec<Statement>,
    },
    Return(Option<Expression>),
    Block(Vec<Statement>),
    /// Verbatim text of a construct outside the subset.
    Opaque(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConcatStyle {
    /// `abi.encodePacked(…)`
    EncodePacked,
    /// `string.concat(…)`
    StringConcat,
    /// `bytes.concat(…)`
    BytesConcat,
}

impl ConcatStyle {
    pub fn callee(self) -> &'static str {
        match self {
            ConcatStyle::EncodePacked => "abi.encodePacked",
            ConcatStyle::StringConcat => "string.concat",
            ConcatStyle::BytesConcat => "bytes.concat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnaryOp {
    Not,
    Neg,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Pow => "**",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Mod => "%=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Expression {
    StringLit(String),
    HexStringLit(String),
    /// Integer literal text as written plus optional denomination (`ether`, `gwei`, …).
    Number {
        text: String,
        unit: Option<String>,
    },
    /// `0x` followed by exactly 40 hex characters, case preserved.
    AddressLit(String),
    Bool(bool),
    Ident(String),
    Member {
        base: Box<Expression>,
        member: String,
    },
    Index {
        base: Box<Expression>,
        index: Option<Box<Expression>>,
    },
    Call {
        callee: Box<Expression>,
        args: Vec<Expression>,
    },
    Concat {
        style: ConcatStyle,
        parts: Vec<Expression>,
    },
    /// `address(this).balance`; `legacy` marks the pre-0.5 `this.balance` spelling.
    ThisBalance {
        legacy: bool,
    },
    MsgSender,
    PayableCast(Box<Expression>),
    AddressCast(Box<Expression>),
    /// Elementary-type conversion such as `uint160(x)`, `bytes(s)`, `string(x)`.
    TypeCast {
        ty: String,
        arg: Box<Expression>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expression>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Assign {
        op: AssignOp,
        target: Box<Expression>,
        value: Box<Expression>,
    },
    Ternary {
        cond: Box<Expression>,
        then: Box<Expression>,
        otherwise: Box<Expression>,
    },
    Paren(Box<Expression>),
}

impl Expression {
    /// Visits this expression and every sub-expression in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expression)) {
        f(self);
        match self {
            Expression::Member { base, .. } => base.walk(f),
            Expression::Index { base, index } => {
                base.walk(f);
                if let Some(i) = index {
                    i.walk(f);
                }
            }
            Expression::Call { callee, args } => {
                callee.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            Expression::Concat { parts, .. } => parts.iter().for_each(|a| a.walk(f)),
            Expression::PayableCast(e)
            | Expression::AddressCast(e)
            | Expression::Paren(e)
            | Expression::TypeCast { arg: e, .. }
            | Expression::Unary { operand: e, .. } => e.walk(f),
            Expression::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expression::Assign { target, value, .. } => {
                target.walk(f);
                value.walk(f);
            }
            Expression::Ternary {
                cond,
                then,
                otherwise,
            } => {
                cond.walk(f);
                then.walk(f);
                otherwise.walk(f);
            }
            _ => {}
        }
    }

    /// Names of all plain identifiers referenced by the expression.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expression::Ident(name) = e {
                out.push(name.as_str());
            }
        });
        out
    }

    /// Strips redundant parentheses.
    pub fn unparen(&self) -> &Expression {
        match self {
            Expression::Paren(inner) => inner.unparen(),
            other => other,
        }
    }
}

impl Statement {
    /// Expressions directly owned by this statement (not by nested statements).
    pub fn own_expressions(&self) -> Vec<&Expression> {
        match self {
            Statement::VarDecl { init, .. } => init.iter().collect(),
            Statement::Expr(e) => vec![e],
            Statement::If { cond, .. } => vec![cond],
            Statement::For { cond, update, .. } => cond.iter().chain(update.iter()).collect(),
            Statement::While { cond, .. } => vec![cond],
            Statement::Return(e) => e.iter().collect(),
            Statement::Block(_) | Statement::Opaque(_) => Vec::new(),
        }
    }

    /// Nested statement lists, in source order.
    pub fn children(&self) -> Vec<&Vec<Statement>> {
        match self {
            Statement::If {
                then_branch,
                else_branch,
                ..
            } => {
                let mut v = vec![then_branch];
                if let Some(e) = else_branch {
                    v.push(e);
                }
                v
            }
            Statement::For { body, .. } | Statement::While { body, .. } => vec![body],
            Statement::Block(b) => vec![b],
            _ => Vec::new(),
        }
    }
}
