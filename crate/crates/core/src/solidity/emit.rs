use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Renders a unit back to Solidity text. Opaque constructs are written
/// verbatim; everything else uses a fixed layout.
pub fn emit_source(unit: &SourceUnit) -> String {
    let mut out = String::new();
    let mut prev_was_header = false;
    for (i, item) in unit.items.iter().enumerate() {
        let is_header = matches!(item, SourceItem::Pragma(_) | SourceItem::Import(_));
        if i > 0 && !(is_header && prev_was_header) {
            out.push('\n');
        }
        match item {
            SourceItem::Pragma(text) => {
                let _ = writeln!(out, "pragma {text};");
            }
            SourceItem::Import(import) => {
                out.push_str(&emit_import(import));
                out.push('\n');
            }
            SourceItem::Contract(c) => emit_contract(&mut out, c),
            SourceItem::Opaque(text) => {
                out.push_str(text);
                out.push('\n');
            }
        }
        prev_was_header = is_header;
    }
    out
}

fn emit_import(import: &ImportDirective) -> String {
    let path = quote(&import.path);
    match &import.form {
        ImportForm::Plain { alias: None } => format!("import {path};"),
        ImportForm::Plain { alias: Some(a) } => format!("import {path} as {a};"),
        ImportForm::Wildcard { alias } => format!("import * as {alias} from {path};"),
        ImportForm::Symbols(inner) => format!("import {{ {inner} }} from {path};"),
    }
}

fn emit_contract(out: &mut String, c: &ContractDef) {
    let keyword = match c.kind {
        ContractKind::Contract => "contract",
        ContractKind::AbstractContract => "abstract contract",
        ContractKind::Interface => "interface",
        ContractKind::Library => "library",
    };
    let _ = write!(out, "{keyword} {}", c.name);
    if !c.bases.is_empty() {
        let _ = write!(out, " is {}", c.bases.join(", "));
    }
    if c.members.is_empty() {
        out.push_str(" {}\n");
        return;
    }
    out.push_str(" {\n");
    for member in &c.members {
        match member {
            ContractMember::StateVar(v) => {
                out.push_str(INDENT);
                out.push_str(&emit_state_var(v));
                out.push('\n');
            }
            ContractMember::Function(f) => out.push_str(&emit_function(f, 1)),
            ContractMember::Opaque(text) => {
                out.push_str(INDENT);
                out.push_str(text);
                out.push('\n');
            }
        }
    }
    out.push_str("}\n");
}

pub fn emit_state_var(v: &StateVar) -> String {
    let mut s = v.ty.clone();
    for attr in &v.attributes {
        s.push(' ');
        s.push_str(attr);
    }
    s.push(' ');
    s.push_str(&v.name);
    if let Some(init) = &v.init {
        s.push_str(" = ");
        s.push_str(&emit_expression(init));
    }
    s.push(';');
    s
}

fn emit_params(params: &[Param]) -> String {
    params
        .iter()
        .map(|p| {
            let mut s = p.ty.clone();
            if let Some(loc) = &p.location {
                s.push(' ');
                s.push_str(loc);
            }
            if let Some(name) = &p.name {
                s.push(' ');
                s.push_str(name);
            }
            s
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders one function at the given indentation depth, including the
/// trailing newline.
pub fn emit_function(f: &FunctionDef, depth: usize) -> String {
    let pad = INDENT.repeat(depth);
    let mut head = match f.kind {
        FunctionKind::Function => format!("function {}", f.name),
        FunctionKind::Constructor => "constructor".to_string(),
        FunctionKind::Receive => "receive".to_string(),
        FunctionKind::Fallback => "fallback".to_string(),
    };
    let _ = write!(head, "({})", emit_params(&f.params));
    if let Some(v) = f.visibility {
        head.push(' ');
        head.push_str(v.as_str());
    }
    if let Some(m) = f.mutability {
        head.push(' ');
        head.push_str(m.as_str());
    }
    if f.is_virtual {
        head.push_str(" virtual");
    }
    if let Some(o) = &f.override_spec {
        head.push(' ');
        head.push_str(o);
    }
    for m in &f.modifiers {
        head.push(' ');
        head.push_str(m);
    }
    if !f.returns.is_empty() {
        let _ = write!(head, " returns ({})", emit_params(&f.returns));
    }
    let mut out = String::new();
    match &f.body {
        None => {
            let _ = writeln!(out, "{pad}{head};");
        }
        Some(body) if body.is_empty() => {
            let _ = writeln!(out, "{pad}{head} {{}}");
        }
        Some(body) => {
            let _ = writeln!(out, "{pad}{head} {{");
            for stmt in body {
                emit_statement(&mut out, stmt, depth + 1);
            }
            let _ = writeln!(out, "{pad}}}");
        }
    }
    out
}

fn emit_block_body(out: &mut String, stmts: &[Statement], depth: usize) {
    for stmt in stmts {
        emit_statement(out, stmt, depth);
    }
}

/// Statement text without indentation or trailing newline; used for `for`
/// initializers and single-line rendering.
fn emit_simple(stmt: &Statement) -> String {
    match stmt {
        Statement::VarDecl {
            ty,
            location,
            name,
            init,
        } => {
            let mut s = ty.clone();
            if let Some(loc) = location {
                s.push(' ');
                s.push_str(loc);
            }
            s.push(' ');
            s.push_str(name);
            if let Some(init) = init {
                s.push_str(" = ");
                s.push_str(&emit_expression(init));
            }
            s
        }
        Statement::Expr(e) => emit_expression(e),
        other => {
            let mut s = String::new();
            emit_statement(&mut s, other, 0);
            s.trim_end().to_string()
        }
    }
}

pub fn emit_statement(out: &mut String, stmt: &Statement, depth: usize) {
    let pad = INDENT.repeat(depth);
    match stmt {
        Statement::VarDecl { .. } | Statement::Expr(_) => {
            let _ = writeln!(out, "{pad}{};", emit_simple(stmt));
        }
        Statement::Return(None) => {
            let _ = writeln!(out, "{pad}return;");
        }
        Statement::Return(Some(e)) => {
            let _ = writeln!(out, "{pad}return {};", emit_expression(e));
        }
        Statement::Opaque(text) => {
            let _ = writeln!(out, "{pad}{text}");
        }
        Statement::Block(stmts) => {
            let _ = writeln!(out, "{pad}{{");
            emit_block_body(out, stmts, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        Statement::If { .. } => {
            out.push_str(&pad);
            emit_if_chain(out, stmt, depth);
        }
        Statement::For {
            init,
            cond,
            update,
            body,
        } => {
            let init = init.as_ref().map(|s| emit_simple(s)).unwrap_or_default();
            let cond = cond.as_ref().map(emit_expression).unwrap_or_default();
            let update = update.as_ref().map(emit_expression).unwrap_or_default();
            let _ = writeln!(out, "{pad}for ({init}; {cond}; {update}) {{");
            emit_block_body(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        Statement::While { cond, body } => {
            let _ = writeln!(out, "{pad}while ({}) {{", emit_expression(cond));
            emit_block_body(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

fn emit_if_chain(out: &mut String, stmt: &Statement, depth: usize) {
    let Statement::If {
        cond,
        then_branch,
        else_branch,
    } = stmt
    else {
        unreachable!()
    };
    let pad = INDENT.repeat(depth);
    let _ = writeln!(out, "if ({}) {{", emit_expression(cond));
    emit_block_body(out, then_branch, depth + 1);
    match else_branch {
        None => {
            let _ = writeln!(out, "{pad}}}");
        }
        Some(branch) if branch.len() == 1 && matches!(branch[0], Statement::If { .. }) => {
            let _ = write!(out, "{pad}}} else ");
            emit_if_chain(out, &branch[0], depth);
        }
        Some(branch) => {
            let _ = writeln!(out, "{pad}}} else {{");
            emit_block_body(out, branch, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\0' => out.push_str("\\0"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn emit_expression(e: &Expression) -> String {
    match e {
        Expression::StringLit(s) => quote(s),
        Expression::HexStringLit(s) => format!("hex{}", quote(s)),
        Expression::Number { text, unit: None } => text.clone(),
        Expression::Number {
            text,
            unit: Some(u),
        } => format!("{text} {u}"),
        Expression::AddressLit(text) => text.clone(),
        Expression::Bool(b) => b.to_string(),
        Expression::Ident(name) => name.clone(),
        Expression::Member { base, member } => format!("{}.{member}", emit_expression(base)),
        Expression::Index { base, index } => format!(
            "{}[{}]",
            emit_expression(base),
            index
                .as_ref()
                .map(|i| emit_expression(i))
                .unwrap_or_default()
        ),
        Expression::Call { callee, args } => {
            format!("{}({})", emit_expression(callee), emit_args(args))
        }
        Expression::Concat { style, parts } => format!("{}({})", style.callee(), emit_args(parts)),
        Expression::ThisBalance { legacy: false } => "address(this).balance".to_string(),
        Expression::ThisBalance { legacy: true } => "this.balance".to_string(),
        Expression::MsgSender => "msg.sender".to_string(),
        Expression::PayableCast(inner) => format!("payable({})", emit_expression(inner)),
        Expression::AddressCast(inner) => format!("address({})", emit_expression(inner)),
        Expression::TypeCast { ty, arg } => format!("{ty}({})", emit_expression(arg)),
        Expression::Unary { op, operand } => {
            let inner = emit_expression(operand);
            match op {
                UnaryOp::Not => format!("!{inner}"),
                UnaryOp::BitNot => format!("~{inner}"),
                UnaryOp::Neg if inner.starts_with('-') => format!("- {inner}"),
                UnaryOp::Neg => format!("-{inner}"),
                UnaryOp::PreInc => format!("++{inner}"),
                UnaryOp::PreDec => format!("--{inner}"),
                UnaryOp::PostInc => format!("{inner}++"),
                UnaryOp::PostDec => format!("{inner}--"),
            }
        }
        Expression::Binary { op, lhs, rhs } => {
            format!(
                "{} {} {}",
                emit_expression(lhs),
                op.symbol(),
                emit_expression(rhs)
            )
        }
        Expression::Assign { op, target, value } => {
            format!(
                "{} {} {}",
                emit_expression(target),
                op.symbol(),
                emit_expression(value)
            )
        }
        Expression::Ternary {
            cond,
            then,
            otherwise,
        } => format!(
            "{} ? {} : {}",
            emit_expression(cond),
            emit_expression(then),
            emit_expression(otherwise)
        ),
        Expression::Paren(inner) => format!("({})", emit_expression(inner)),
    }
}

fn emit_args(args: &[Expression]) -> String {
    args.iter()
        .map(emit_expression)
        .collect::<Vec<_>>()
        .join(", ")
}
