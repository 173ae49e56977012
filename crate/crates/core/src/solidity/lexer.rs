use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// Numeric literal text as written (`42`, `0xD6466`, `1e18`).
    Number(String),
    /// Decoded string literal contents.
    Str(String),
    /// `hex"…"` literal contents.
    HexStr(String),
    Punct(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokenKind::Punct(q) if *q == p)
    }

    pub fn is_ident(&self, name: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(s) if s == name)
    }

    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Ident(s) => Some(s),
            _ => None,
        }
    }
}

// Longest first so that greedy matching picks `>>=` over `>>` over `>`.
const PUNCTS: &[&str] = &[
    "...", ">>=", "<<=", "**=", "=>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>", "**", "->", "..", "+", "-", "*", "/", "%", "=",
    "<", ">", "!", "~", "&", "|", "^", "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}",
];

pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            line_start: 0,
        }
    }

    fn column(&self, pos: usize) -> usize {
        self.src[self.line_start..pos].chars().count() + 1
    }

    fn error(&self, pos: usize, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.column(pos),
            message: message.into(),
        }
    }

    fn bump_newlines(&mut self, from: usize, to: usize) {
        for (i, b) in self.bytes[from..to].iter().enumerate() {
            if *b == b'\n' {
                self.line += 1;
                self.line_start = from + i + 1;
            }
        }
    }

    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut tokens = Vec::new();
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_whitespace() {
                if c == b'\n' {
                    self.line += 1;
                    self.line_start = self.pos + 1;
                }
                self.pos += 1;
                continue;
            }
            if self.src[self.pos..].starts_with("//") {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            if self.src[self.pos..].starts_with("/*") {
                let start = self.pos;
                match self.src[self.pos + 2..].find("*/") {
                    Some(off) => {
                        let end = self.pos + 2 + off + 2;
                        self.bump_newlines(start, end);
                        self.pos = end;
                    }
                    None => return Err(self.error(start, "unterminated block comment")),
                }
                continue;
            }

            let start = self.pos;
            let line = self.line;
            let column = self.column(start);
            let kind = if c == b'"' || c == b'\'' {
                TokenKind::Str(self.string_literal()?)
            } else if c.is_ascii_digit() {
                self.number()
            } else if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
                let word = self.word();
                if (word == "hex" || word == "unicode")
                    && self.pos < self.bytes.len()
                    && (self.bytes[self.pos] == b'"' || self.bytes[self.pos] == b'\'')
                {
                    let body = self.string_literal()?;
                    if word == "hex" {
                        TokenKind::HexStr(body)
                    } else {
                        TokenKind::Str(body)
                    }
                } else {
                    TokenKind::Ident(word)
                }
            } else if let Some(p) = PUNCTS
                .iter()
                .find(|p| self.src[self.pos..].starts_with(**p))
            {
                self.pos += p.len();
                TokenKind::Punct(p)
            } else {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                return Err(self.error(start, format!("unexpected character `{ch}`")));
            };
            tokens.push(Token {
                kind,
                start,
                end: self.pos,
                line,
                column,
            });
        }
        Ok(tokens)
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_alphanumeric() || b == b'_' || b == b'$' {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.src[start..self.pos].to_string()
    }

    fn number(&mut self) -> TokenKind {
        let start = self.pos;
        if self.src[self.pos..].starts_with("0x") || self.src[self.pos..].starts_with("0X") {
            self.pos += 2;
            while self.pos < self.bytes.len()
                && (self.bytes[self.pos].is_ascii_hexdigit() || self.bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
        } else {
            while self.pos < self.bytes.len() {
                let b = self.bytes[self.pos];
                let exp = (b == b'e' || b == b'E')
                    && self
                        .bytes
                        .get(self.pos + 1)
                        .is_some_and(|n| n.is_ascii_digit() || *n == b'-');
                let frac =
                    b == b'.' && self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit);
                if b.is_ascii_digit() || b == b'_' || frac {
                    self.pos += 1;
                } else if exp {
                    self.pos += 2;
                } else {
                    break;
                }
            }
        }
        TokenKind::Number(self.src[start..self.pos].to_string())
    }

    fn string_literal(&mut self) -> Result<String, SyntaxError> {
        let start = self.pos;
        let quote = self.bytes[self.pos];
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(ch) = self.src[self.pos..].chars().next() else {
                return Err(self.error(start, "unterminated string literal"));
            };
            if ch == '\n' {
                return Err(self.error(start, "unterminated string literal"));
            }
            self.pos += ch.len_utf8();
            if ch as u32 == quote as u32 {
                return Ok(out);
            }
            if ch != '\\' {
                out.push(ch);
                continue;
            }
            let Some(esc) = self.src[self.pos..].chars().next() else {
                return Err(self.error(start, "unterminated string literal"));
            };
            self.pos += esc.len_utf8();
            match esc {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                '0' => out.push('\0'),
                'x' => {
                    let hex = self.src.get(self.pos..self.pos + 2).unwrap_or("");
                    let v = u8::from_str_radix(hex, 16)
                        .map_err(|_| self.error(self.pos, "bad \\x escape"))?;
                    out.push(v as char);
                    self.pos += 2;
                }
                'u' => {
                    let hex = self.src.get(self.pos..self.pos + 4).unwrap_or("");
                    let v = u32::from_str_radix(hex, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| self.error(self.pos, "bad \\u escape"))?;
                    out.push(v);
                    self.pos += 4;
                }
                other => out.push(other),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_operators_greedily() {
        assert_eq!(
            kinds("a >>= b ... c .. d"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Punct(">>="),
                TokenKind::Ident("b".into()),
                TokenKind::Punct("..."),
                TokenKind::Ident("c".into()),
                TokenKind::Punct(".."),
                TokenKind::Ident("d".into()),
            ]
        );
    }

    #[test]
    fn skips_comments_and_tracks_lines() {
        let toks = tokenize("/* a\n b */ x // y\n z").unwrap();
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[0].line, 2);
        assert_eq!(toks[1].line, 3);
        assert_eq!(toks[1].column, 2);
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(
            kinds(r#"0xD6466 1e18 0.1 "a\"b" hex"00ff""#),
            vec![
                TokenKind::Number("0xD6466".into()),
                TokenKind::Number("1e18".into()),
                TokenKind::Number("0.1".into()),
                TokenKind::Str("a\"b".into()),
                TokenKind::HexStr("00ff".into()),
            ]
        );
    }

    #[test]
    fn unterminated_string_is_error() {
        let err = tokenize("x = \"abc").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 5);
    }
}
