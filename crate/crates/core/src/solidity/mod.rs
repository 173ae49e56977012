//! Lexer, parser and printer for the Solidity subset used by bot contracts.

mod ast;
mod detect;
mod emit;
mod lexer;
mod parser;

use std::fmt;

pub use ast::*;
pub use detect::detect_solidity;
pub use emit::{
    emit_expression, emit_function, emit_source, emit_state_var, emit_statement, quote,
};
pub use lexer::{tokenize, Token, TokenKind};
pub(crate) use parser::is_elementary_type;
pub use parser::parse_source;

/// A lexing or parsing failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at {}:{}: {}",
            self.line, self.column, self.message
        )
    }
}
