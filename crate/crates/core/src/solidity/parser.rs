use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;
use crate::address::Address;

/// Words that can never start an expression in the subset. Statements that
/// begin with them (or use them mid-expression) fall back to opaque text.
const RESERVED: &[&str] = &[
    "assembly",
    "break",
    "catch",
    "continue",
    "delete",
    "do",
    "emit",
    "new",
    "try",
    "unchecked",
    "event",
    "modifier",
    "struct",
    "enum",
    "using",
    "function",
    "mapping",
    "else",
    "returns",
];

const UNITS: &[&str] = &[
    "wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks",
    "years",
];

const LOCATIONS: &[&str] = &["memory", "storage", "calldata"];

pub(crate) fn is_elementary_type(word: &str) -> bool {
    match word {
        "address" | "bool" | "string" | "bytes" | "byte" | "uint" | "int" | "payable" => true,
        _ => {
            let numeric = |prefix: &str| {
                word.strip_prefix(prefix).is_some_and(|rest| {
                    !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())
                })
            };
            numeric("uint") || numeric("int") || numeric("bytes")
        }
    }
}

/// Marker for a failed attempt to parse a construct as part of the subset.
/// Callers either fall back to opaque text or convert into a [`SyntaxError`].
#[derive(Debug)]
struct Reject {
    at: usize,
    message: String,
}

type PResult<T> = Result<T, Reject>;

pub fn parse_source(source: &str) -> Result<SourceUnit, SyntaxError> {
    let tokens = tokenize(source)?;
    check_balance(&tokens)?;
    let mut parser = Parser {
        src: source,
        toks: tokens,
        pos: 0,
    };
    let items = parser.source_items()?;
    let unit = SourceUnit {
        items,
        raw_text: source.to_string(),
    };

    let mut seen = HashSet::new();
    for contract in unit.contracts() {
        if !seen.insert(contract.name.as_str()) {
            return Err(parser.syntax_error_named(&contract.name, "duplicate contract name"));
        }
        let mut fn_names = HashSet::new();
        for f in contract.named_functions() {
            if !fn_names.insert(f.name.as_str()) {
                return Err(parser.syntax_error_named(
                    &f.name,
                    &format!(
                        "duplicate function `{}` in contract `{}`",
                        f.name, contract.name
                    ),
                ));
            }
        }
    }
    Ok(unit)
}

fn check_balance(tokens: &[Token]) -> Result<(), SyntaxError> {
    let mut stack: Vec<&Token> = Vec::new();
    for tok in tokens {
        let TokenKind::Punct(p) = tok.kind else {
            continue;
        };
        match p {
            "(" | "[" | "{" => stack.push(tok),
            ")" | "]" | "}" => {
                let open = match p {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                match stack.pop() {
                    Some(top) if top.is_punct(open) => {}
                    Some(top) => {
                        return Err(SyntaxError {
                            line: tok.line,
                            column: tok.column,
                            message: format!(
                                "mismatched `{p}` (opened `{}` at {}:{})",
                                match &top.kind {
                                    TokenKind::Punct(q) => q,
                                    _ => "?",
                                },
                                top.line,
                                top.column
                            ),
                        })
                    }
                    None => {
                        return Err(SyntaxError {
                            line: tok.line,
                            column: tok.column,
                            message: format!("unbalanced `{p}`"),
                        })
                    }
                }
            }
            _ => {}
        }
    }
    if let Some(open) = stack.pop() {
        let p = match &open.kind {
            TokenKind::Punct(p) => *p,
            _ => "?",
        };
        return Err(SyntaxError {
            line: open.line,
            column: open.column,
            message: format!("unclosed `{p}`"),
        });
    }
    Ok(())
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    // ----- token helpers -------------------------------------------------

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.toks.get(self.pos + offset)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_ident(&self, name: &str) -> bool {
        self.peek().is_some_and(|t| t.is_ident(name))
    }

    fn reject<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(Reject {
            at: self.pos,
            message: message.into(),
        })
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.reject(format!("expected `{p}`"))
        }
    }

    fn eat_ident(&mut self, name: &str) -> bool {
        if self.at_ident(name) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().and_then(Token::ident) {
            Some(name) => {
                let name = name.to_string();
                self.pos += 1;
                Ok(name)
            }
            None => self.reject("expected identifier"),
        }
    }

    fn to_syntax_error(&self, reject: Reject) -> SyntaxError {
        let (line, column) = match self.toks.get(reject.at).or(self.toks.last()) {
            Some(t) => (t.line, t.column),
            None => (1, 1),
        };
        SyntaxError {
            line,
            column,
            message: reject.message,
        }
    }

    fn syntax_error_named(&self, name: &str, message: &str) -> SyntaxError {
        let tok = self.toks.iter().find(|t| t.is_ident(name));
        SyntaxError {
            line: tok.map_or(1, |t| t.line),
            column: tok.map_or(1, |t| t.column),
            message: message.to_string(),
        }
    }

    fn text_between(&self, from_tok: usize, to_tok: usize) -> String {
        if from_tok >= to_tok {
            return String::new();
        }
        self.src[self.toks[from_tok].start..self.toks[to_tok - 1].end].to_string()
    }

    /// Source text of tokens `[from, to)` with comments dropped and any
    /// whitespace run between two tokens collapsed to one space.
    fn joined(&self, from: usize, to: usize) -> String {
        let mut out = String::new();
        for (i, t) in self.toks[from..to].iter().enumerate() {
            if i > 0 && self.toks[from + i - 1].end < t.start {
                out.push(' ');
            }
            out.push_str(&self.src[t.start..t.end]);
        }
        out
    }

    /// Consumes a construct outside the subset: up to and including a `;` at
    /// nesting depth zero, or through a brace group that closes at depth zero.
    /// A leading run of `..`/`...` elision markers is captured on its own.
    fn skip_opaque(&mut self) -> String {
        let start = self.pos;
        if self.at_punct("...") || self.at_punct("..") {
            while self.at_punct("...") || self.at_punct("..") {
                self.pos += 1;
            }
            return self.text_between(start, self.pos);
        }
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            if depth == 0 && tok.is_punct("}") {
                break;
            }
            let kind = tok.kind.clone();
            self.pos += 1;
            match kind {
                TokenKind::Punct("(" | "[" | "{") => depth += 1,
                TokenKind::Punct(close @ (")" | "]" | "}")) => {
                    depth = depth.saturating_sub(1);
                    if close == "}" && depth == 0 {
                        break;
                    }
                }
                TokenKind::Punct(";") if depth == 0 => break,
                _ => {}
            }
        }
        self.text_between(start, self.pos)
    }

    /// Skips a balanced group starting at an opening delimiter.
    fn skip_group(&mut self) -> PResult<()> {
        let mut depth = 0usize;
        loop {
            let Some(tok) = self.peek() else {
                return self.reject("unexpected end of input");
            };
            let kind = tok.kind.clone();
            self.pos += 1;
            match kind {
                TokenKind::Punct("(" | "[" | "{") => depth += 1,
                TokenKind::Punct(")" | "]" | "}") => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                _ => {}
            }
        }
    }

    // ----- top level -----------------------------------------------------

    fn source_items(&mut self) -> Result<Vec<SourceItem>, SyntaxError> {
        let mut items = Vec::new();
        while self.peek().is_some() {
            if self.at_ident("pragma") {
                let start = self.pos + 1;
                while self.peek().is_some() && !self.at_punct(";") {
                    self.pos += 1;
                }
                let text = self.joined(start, self.pos);
                if !self.eat_punct(";") {
                    return Err(self.to_syntax_error(Reject {
                        at: self.pos.saturating_sub(1),
                        message: "unterminated pragma".into(),
                    }));
                }
                items.push(SourceItem::Pragma(text));
            } else if self.at_ident("import") {
                let item = self.import().map_err(|r| self.to_syntax_error(r))?;
                items.push(SourceItem::Import(item));
            } else if self.at_ident("contract")
                || self.at_ident("interface")
                || self.at_ident("library")
                || (self.at_ident("abstract")
                    && self.peek_at(1).is_some_and(|t| t.is_ident("contract")))
            {
                let c = self.contract().map_err(|r| self.to_syntax_error(r))?;
                items.push(SourceItem::Contract(c));
            } else if self.at_punct("}") {
                return Err(self.to_syntax_error(Reject {
                    at: self.pos,
                    message: "unexpected `}`".into(),
                }));
            } else {
                items.push(SourceItem::Opaque(self.skip_opaque()));
            }
        }
        Ok(items)
    }

    fn import(&mut self) -> PResult<ImportDirective> {
        self.pos += 1; // import
        let directive = if let Some(TokenKind::Str(path)) = self.peek().map(|t| t.kind.clone()) {
            self.pos += 1;
            let alias = if self.eat_ident("as") {
                Some(self.ident()?)
            } else {
                None
            };
            ImportDirective {
                path,
                form: ImportForm::Plain { alias },
            }
        } else if self.eat_punct("*") {
            if !self.eat_ident("as") {
                return self.reject("malformed import: expected `as`");
            }
            let alias = self.ident()?;
            if !self.eat_ident("from") {
                return self.reject("malformed import: expected `from`");
            }
            let path = self.import_path()?;
            ImportDirective {
                path,
                form: ImportForm::Wildcard { alias },
            }
        } else if self.at_punct("{") {
            let open = self.pos;
            self.skip_group()?;
            let inner = self.joined(open + 1, self.pos - 1);
            if !self.eat_ident("from") {
                return self.reject("malformed import: expected `from`");
            }
            let path = self.import_path()?;
            ImportDirective {
                path,
                form: ImportForm::Symbols(inner),
            }
        } else {
            return self.reject("malformed import directive");
        };
        self.expect_punct(";")?;
        Ok(directive)
    }

    fn import_path(&mut self) -> PResult<String> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Str(path)) => {
                self.pos += 1;
                Ok(path)
            }
            _ => self.reject("malformed import: expected path string"),
        }
    }

    fn contract(&mut self) -> PResult<ContractDef> {
        let kind = if self.eat_ident("abstract") {
            self.pos += 1;
            ContractKind::AbstractContract
        } else {
            let kw = self.ident()?;
            match kw.as_str() {
                "interface" => ContractKind::Interface,
                "library" => ContractKind::Library,
                _ => ContractKind::Contract,
            }
        };
        let name = match self.peek().and_then(Token::ident) {
            Some(n) if !RESERVED.contains(&n) && n != "is" => {
                let n = n.to_string();
                self.pos += 1;
                n
            }
            _ => return self.reject("malformed contract declaration: expected a name"),
        };
        let mut bases = Vec::new();
        if self.eat_ident("is") {
            loop {
                let start = self.pos;
                self.ident()?;
                while self.eat_punct(".") {
                    self.ident()?;
                }
                if self.at_punct("(") {
                    self.skip_group()?;
                }
                bases.push(self.joined(start, self.pos));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        if !self.eat_punct("{") {
            return self.reject(format!(
                "malformed contract declaration `{name}`: expected `{{`"
            ));
        }
        let mut members = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return self.reject("unexpected end of input in contract body");
            }
            members.push(self.member()?);
        }
        self.pos += 1;
        Ok(ContractDef {
            kind,
            name,
            bases,
            members,
        })
    }

    fn member(&mut self) -> PResult<ContractMember> {
        let is_function_header = self.at_ident("function")
            || ((self.at_ident("constructor")
                || self.at_ident("receive")
                || self.at_ident("fallback"))
                && self.peek_at(1).is_some_and(|t| t.is_punct("(")));
        if is_function_header {
            return self.function().map(ContractMember::Function);
        }
        let start = self.pos;
        if let Ok(var) = self.state_var() {
            return Ok(ContractMember::StateVar(var));
        }
        self.pos = start;
        Ok(ContractMember::Opaque(self.skip_opaque()))
    }

    fn state_var(&mut self) -> PResult<StateVar> {
        let first = self.peek().and_then(Token::ident).unwrap_or("");
        if RESERVED.contains(&first) && first != "mapping" {
            return self.reject("not a state variable");
        }
        let ty = self.type_name()?;
        let mut attributes = Vec::new();
        while let Some(word) = self.peek().and_then(Token::ident) {
            if matches!(
                word,
                "public"
                    | "private"
                    | "internal"
                    | "constant"
                    | "immutable"
                    | "override"
                    | "transient"
            ) {
                attributes.push(word.to_string());
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = self.ident()?;
        let init = if self.eat_punct("=") {
            Some(self.expression()?)
        } else {
            None
        };
        self.expect_punct(";")?;
        Ok(StateVar {
            ty,
            attributes,
            name,
            init,
        })
    }

    fn function(&mut self) -> PResult<FunctionDef> {
        let head = self.ident()?;
        let (kind, name) = match head.as_str() {
            "constructor" => (FunctionKind::Constructor, String::new()),
            "receive" => (FunctionKind::Receive, String::new()),
            "fallback" => (FunctionKind::Fallback, String::new()),
            _ => match self.peek().and_then(Token::ident) {
                Some(n) => {
                    let n = n.to_string();
                    self.pos += 1;
                    match n.as_str() {
                        "receive" => (FunctionKind::Receive, String::new()),
                        "fallback" => (FunctionKind::Fallback, String::new()),
                        _ => (FunctionKind::Function, n),
                    }
                }
                None if self.at_punct("(") => (FunctionKind::Fallback, String::new()),
                None => return self.reject("malformed function declaration: expected a name"),
            },
        };
        if !self.at_punct("(") {
            return self.reject("malformed function declaration: expected `(`");
        }
        let params = self.param_list()?;
        let mut visibility = None;
        let mut mutability = None;
        let mut is_virtual = false;
        let mut override_spec = None;
        let mut modifiers = Vec::new();
        let mut returns = Vec::new();
        loop {
            let Some(word) = self.peek().and_then(Token::ident).map(str::to_string) else {
                break;
            };
            match word.as_str() {
                "public" | "private" | "internal" | "external" => {
                    visibility = Some(match word.as_str() {
                        "public" => Visibility::Public,
                        "private" => Visibility::Private,
                        "internal" => Visibility::Internal,
                        _ => Visibility::External,
                    });
                    self.pos += 1;
                }
                "pure" | "view" | "payable" | "constant" => {
                    mutability = Some(match word.as_str() {
                        "pure" => Mutability::Pure,
                        "payable" => Mutability::Payable,
                        _ => Mutability::View,
                    });
                    self.pos += 1;
                }
                "virtual" => {
                    is_virtual = true;
                    self.pos += 1;
                }
                "override" => {
                    let start = self.pos;
                    self.pos += 1;
                    if self.at_punct("(") {
                        self.skip_group()?;
                    }
                    override_spec = Some(self.joined(start, self.pos));
                }
                "returns" => {
                    self.pos += 1;
                    if !self.at_punct("(") {
                        return self
                            .reject("malformed function declaration: expected `(` after returns");
                    }
                    returns = self.param_list()?;
                }
                _ => {
                    let start = self.pos;
                    self.pos += 1;
                    while self.eat_punct(".") {
                        self.ident()?;
                    }
                    if self.at_punct("(") {
                        self.skip_group()?;
                    }
                    modifiers.push(self.text_between(start, self.pos));
                }
            }
        }
        let body = if self.eat_punct(";") {
            None
        } else if self.at_punct("{") {
            Some(self.block()?)
        } else {
            return self.reject("malformed function declaration: expected body or `;`");
        };
        Ok(FunctionDef {
            kind,
            name,
            params,
            visibility,
            mutability,
            is_virtual,
            override_spec,
            modifiers,
            returns,
            body,
        })
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let ty = self.type_name()?;
            let mut location = None;
            if let Some(word) = self.peek().and_then(Token::ident) {
                if LOCATIONS.contains(&word) {
                    location = Some(word.to_string());
                    self.pos += 1;
                }
            }
            let name = match self.peek().and_then(Token::ident) {
                Some(n) => {
                    let n = n.to_string();
                    self.pos += 1;
                    Some(n)
                }
                None => None,
            };
            params.push(Param { ty, location, name });
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(")")?;
            return Ok(params);
        }
    }

    fn type_name(&mut self) -> PResult<String> {
        let mut ty = if self.eat_ident("mapping") {
            self.expect_punct("(")?;
            let key = self.type_name()?;
            // optional key name (0.8.18+)
            if self.peek().and_then(Token::ident).is_some() {
                self.pos += 1;
            }
            self.expect_punct("=>")?;
            let value = self.type_name()?;
            if self.peek().and_then(Token::ident).is_some() {
                self.pos += 1;
            }
            self.expect_punct(")")?;
            format!("mapping({key} => {value})")
        } else {
            let word = self.ident()?;
            if RESERVED.contains(&word.as_str()) {
                return self.reject("expected a type name");
            }
            let mut ty = word.clone();
            if word == "address" && self.at_ident("payable") {
                self.pos += 1;
                ty.push_str(" payable");
            }
            while self.at_punct(".") && self.peek_at(1).and_then(Token::ident).is_some() {
                self.pos += 1;
                ty.push('.');
                ty.push_str(&self.ident()?);
            }
            ty
        };
        while self.at_punct("[") {
            let open = self.pos;
            self.skip_group()?;
            let inner: String = self.toks[open + 1..self.pos - 1]
                .iter()
                .map(|t| &self.src[t.start..t.end])
                .collect();
            ty.push('[');
            ty.push_str(&inner);
            ty.push(']');
        }
        Ok(ty)
    }

    // ----- statements ----------------------------------------------------

    fn block(&mut self) -> PResult<Vec<Statement>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return self.reject("unexpected end of input in block");
            }
            stmts.push(self.statement());
        }
        self.pos += 1;
        Ok(stmts)
    }

    /// Parses one statement, falling back to verbatim opaque text.
    fn statement(&mut self) -> Statement {
        let start = self.pos;
        match self.try_statement() {
            Ok(stmt) => stmt,
            Err(_) => {
                self.pos = start;
                Statement::Opaque(self.skip_opaque())
            }
        }
    }

    fn branch_body(&mut self) -> PResult<Vec<Statement>> {
        if self.at_punct("{") {
            self.block()
        } else if self.peek().is_none() || self.at_punct("}") {
            self.reject("expected statement")
        } else {
            Ok(vec![self.statement()])
        }
    }

    fn try_statement(&mut self) -> PResult<Statement> {
        if self.at_punct("{") {
            return Ok(Statement::Block(self.block()?));
        }
        if self.at_punct("...") || self.at_punct("..") {
            return self.reject("elision");
        }
        if self.eat_ident("if") {
            self.expect_punct("(")?;
            let cond = self.expression()?;
            self.expect_punct(")")?;
            let then_branch = self.branch_body()?;
            let else_branch = if self.eat_ident("else") {
                Some(self.branch_body()?)
            } else {
                None
            };
            return Ok(Statement::If {
                cond,
                then_branch,
                else_branch,
            });
        }
        if self.eat_ident("for") {
            self.expect_punct("(")?;
            let init = if self.eat_punct(";") {
                None
            } else {
                let s = self.simple_statement()?;
                self.expect_punct(";")?;
                Some(Box::new(s))
            };
            let cond = if self.at_punct(";") {
                None
            } else {
                Some(self.expression()?)
            };
            self.expect_punct(";")?;
            let update = if self.at_punct(")") {
                None
            } else {
                Some(self.expression()?)
            };
            self.expect_punct(")")?;
            let body = self.branch_body()?;
            return Ok(Statement::For {
                init,
                cond,
                update,
                body,
            });
        }
        if self.eat_ident("while") {
            self.expect_punct("(")?;
            let cond = self.expression()?;
            self.expect_punct(")")?;
            let body = self.branch_body()?;
            return Ok(Statement::While { cond, body });
        }
        if self.eat_ident("return") {
            let value = if self.at_punct(";") {
                None
            } else {
                Some(self.expression()?)
            };
            self.expect_punct(";")?;
            return Ok(Statement::Return(value));
        }
        let stmt = self.simple_statement()?;
        self.expect_punct(";")?;
        Ok(stmt)
    }

    /// Declaration or expression, without the trailing `;`.
    fn simple_statement(&mut self) -> PResult<Statement> {
        if self.is_decl_start() {
            let ty = self.type_name()?;
            let mut location = None;
            if let Some(word) = self.peek().and_then(Token::ident) {
                if LOCATIONS.contains(&word) {
                    location = Some(word.to_string());
                    self.pos += 1;
                }
            }
            let name = self.ident()?;
            if RESERVED.contains(&name.as_str()) {
                return self.reject("expected variable name");
            }
            let init = if self.eat_punct("=") {
                Some(self.expression()?)
            } else {
                None
            };
            return Ok(Statement::VarDecl {
                ty,
                location,
                name,
                init,
            });
        }
        Ok(Statement::Expr(self.expression()?))
    }

    fn is_decl_start(&self) -> bool {
        let Some(first) = self.peek().and_then(Token::ident) else {
            return false;
        };
        if RESERVED.contains(&first) || first == "return" {
            return false;
        }
        if is_elementary_type(first) && first != "payable" {
            let next = self.peek_at(1);
            return !next.is_some_and(|t| t.is_punct("(") || t.is_punct("."));
        }
        // Ident ('.' Ident)* ('[' … ']')* Ident
        let mut i = self.pos + 1;
        while self.toks.get(i).is_some_and(|t| t.is_punct("."))
            && self.toks.get(i + 1).and_then(Token::ident).is_some()
        {
            i += 2;
        }
        while self.toks.get(i).is_some_and(|t| t.is_punct("[")) {
            let mut depth = 0usize;
            loop {
                let Some(t) = self.toks.get(i) else {
                    return false;
                };
                if t.is_punct("[") {
                    depth += 1;
                } else if t.is_punct("]") {
                    depth -= 1;
                    if depth == 0 {
                        i += 1;
                        break;
                    }
                }
                i += 1;
            }
        }
        self.toks
            .get(i)
            .and_then(Token::ident)
            .is_some_and(|w| !RESERVED.contains(&w))
    }

    // ----- expressions ---------------------------------------------------

    fn expression(&mut self) -> PResult<Expression> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expression> {
        let target = self.ternary()?;
        let op = match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Punct("=")) => AssignOp::Assign,
            Some(TokenKind::Punct("+=")) => AssignOp::Add,
            Some(TokenKind::Punct("-=")) => AssignOp::Sub,
            Some(TokenKind::Punct("*=")) => AssignOp::Mul,
            Some(TokenKind::Punct("/=")) => AssignOp::Div,
            Some(TokenKind::Punct("%=")) => AssignOp::Mod,
            _ => return Ok(target),
        };
        self.pos += 1;
        let value = self.assignment()?;
        Ok(Expression::Assign {
            op,
            target: Box::new(target),
            value: Box::new(value),
        })
    }

    fn ternary(&mut self) -> PResult<Expression> {
        let cond = self.binary(0)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let then = self.assignment()?;
        self.expect_punct(":")?;
        let otherwise = self.assignment()?;
        Ok(Expression::Ternary {
            cond: Box::new(cond),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    fn binary_op_at(&self, level: usize) -> Option<BinaryOp> {
        let TokenKind::Punct(p) = self.peek()?.kind else {
            return None;
        };
        let op = match (level, p) {
            (0, "||") => BinaryOp::Or,
            (1, "&&") => BinaryOp::And,
            (2, "==") => BinaryOp::Eq,
            (2, "!=") => BinaryOp::Ne,
            (3, "<") => BinaryOp::Lt,
            (3, "<=") => BinaryOp::Le,
            (3, ">") => BinaryOp::Gt,
            (3, ">=") => BinaryOp::Ge,
            (4, "|") => BinaryOp::BitOr,
            (5, "^") => BinaryOp::BitXor,
            (6, "&") => BinaryOp::BitAnd,
            (7, "<<") => BinaryOp::Shl,
            (7, ">>") => BinaryOp::Shr,
            (8, "+") => BinaryOp::Add,
            (8, "-") => BinaryOp::Sub,
            (9, "*") => BinaryOp::Mul,
            (9, "/") => BinaryOp::Div,
            (9, "%") => BinaryOp::Mod,
            _ => return None,
        };
        Some(op)
    }

    fn binary(&mut self, level: usize) -> PResult<Expression> {
        if level == 10 {
            return self.power();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.binary_op_at(level) {
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn power(&mut self) -> PResult<Expression> {
        let base = self.unary()?;
        if self.eat_punct("**") {
            let exp = self.power()?;
            return Ok(Expression::Binary {
                op: BinaryOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn unary(&mut self) -> PResult<Expression> {
        let op = match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Punct("!")) => Some(UnaryOp::Not),
            Some(TokenKind::Punct("-")) => Some(UnaryOp::Neg),
            Some(TokenKind::Punct("~")) => Some(UnaryOp::BitNot),
            Some(TokenKind::Punct("++")) => Some(UnaryOp::PreInc),
            Some(TokenKind::Punct("--")) => Some(UnaryOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(Expression::Unary {
                op,
                operand: Box::new(operand),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expression> {
        let mut expr = self.primary()?;
        loop {
            if self.eat_punct(".") {
                let member = self.ident()?;
                expr = match (expr, member.as_str()) {
                    (Expression::Ident(base), "sender") if base == "msg" => Expression::MsgSender,
                    (Expression::Ident(base), "balance") if base == "this" => {
                        Expression::ThisBalance { legacy: true }
                    }
                    (Expression::AddressCast(inner), "balance") if matches!(inner.as_ref(), Expression::Ident(n) if n == "this") => {
                        Expression::ThisBalance { legacy: false }
                    }
                    (base, _) => Expression::Member {
                        base: Box::new(base),
                        member,
                    },
                };
            } else if self.at_punct("[") {
                self.pos += 1;
                let index = if self.at_punct("]") {
                    None
                } else {
                    Some(Box::new(self.expression()?))
                };
                self.expect_punct("]")?;
                expr = Expression::Index {
                    base: Box::new(expr),
                    index,
                };
            } else if self.at_punct("(") {
                let args = self.call_args()?;
                expr = match expr {
                    Expression::Member { base, member } => {
                        let style = match (base.as_ref(), member.as_str()) {
                            (Expression::Ident(b), "encodePacked") if b == "abi" => {
                                Some(ConcatStyle::EncodePacked)
                            }
                            (Expression::Ident(b), "concat") if b == "string" => {
                                Some(ConcatStyle::StringConcat)
                            }
                            (Expression::Ident(b), "concat") if b == "bytes" => {
                                Some(ConcatStyle::BytesConcat)
                            }
                            _ => None,
                        };
                        match style {
                            Some(style) => Expression::Concat { style, parts: args },
                            None => Expression::Call {
                                callee: Box::new(Expression::Member { base, member }),
                                args,
                            },
                        }
                    }
                    callee => Expression::Call {
                        callee: Box::new(callee),
                        args,
                    },
                };
            } else if self.at_punct("++") {
                self.pos += 1;
                expr = Expression::Unary {
                    op: UnaryOp::PostInc,
                    operand: Box::new(expr),
                };
            } else if self.at_punct("--") {
                self.pos += 1;
                expr = Expression::Unary {
                    op: UnaryOp::PostDec,
                    operand: Box::new(expr),
                };
            } else if self.at_punct("{") {
                return self.reject("call options are outside the subset");
            } else {
                return Ok(expr);
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Expression>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            if self.at_punct("{") {
                return self.reject("named arguments are outside the subset");
            }
            args.push(self.expression()?);
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(")")?;
            return Ok(args);
        }
    }

    fn primary(&mut self) -> PResult<Expression> {
        let Some(tok) = self.peek().cloned() else {
            return self.reject("unexpected end of input");
        };
        match tok.kind {
            TokenKind::Str(s) => {
                self.pos += 1;
                Ok(Expression::StringLit(s))
            }
            TokenKind::HexStr(s) => {
                self.pos += 1;
                Ok(Expression::HexStringLit(s))
            }
            TokenKind::Number(text) => {
                self.pos += 1;
                if Address::is_address_text(&text) {
                    return Ok(Expression::AddressLit(text));
                }
                let unit = match self.peek().and_then(Token::ident) {
                    Some(u) if UNITS.contains(&u) => {
                        let u = u.to_string();
                        self.pos += 1;
                        Some(u)
                    }
                    _ => None,
                };
                Ok(Expression::Number { text, unit })
            }
            TokenKind::Punct("(") => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect_punct(")")?;
                Ok(Expression::Paren(Box::new(inner)))
            }
            TokenKind::Ident(word) => {
                if RESERVED.contains(&word.as_str())
                    || matches!(word.as_str(), "if" | "for" | "while" | "return")
                {
                    return self.reject(format!("`{word}` is outside the expression subset"));
                }
                self.pos += 1;
                match word.as_str() {
                    "true" => return Ok(Expression::Bool(true)),
                    "false" => return Ok(Expression::Bool(false)),
                    _ => {}
                }
                if is_elementary_type(&word) && self.at_punct("(") {
                    self.pos += 1;
                    let arg = self.expression()?;
                    self.expect_punct(")")?;
                    let arg = Box::new(arg);
                    return Ok(match word.as_str() {
                        "address" => Expression::AddressCast(arg),
                        "payable" => Expression::PayableCast(arg),
                        _ => Expression::TypeCast { ty: word, arg },
                    });
                }
                Ok(Expression::Ident(word))
            }
            TokenKind::Punct(p) => self.reject(format!("unexpected `{p}`")),
        }
    }
}
