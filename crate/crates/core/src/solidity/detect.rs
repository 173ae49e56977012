use std::sync::OnceLock;

use regex::Regex;

fn contract_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\bcontract\s+[A-Za-z_$][A-Za-z0-9_$]*\s*(\{|\bis\b)").expect("valid regex")
    })
}

fn function_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\bfunction\b").expect("valid regex"))
}

fn pragma_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\bpragma\s+solidity\b").expect("valid regex"))
}

/// Heuristic check for Solidity source in a downloaded file.
///
/// Counts the markers `pragma solidity`, `contract <Name>` and `function`;
/// the file qualifies when at least two are present and one of them is a
/// named contract declaration. Binary content never qualifies.
pub fn detect_solidity(bytes: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(bytes) else {
        return false;
    };
    if text.contains('\0') {
        return false;
    }
    let has_contract = contract_marker().is_match(text);
    if !has_contract {
        return false;
    }
    let count = 1
        + usize::from(pragma_marker().is_match(text))
        + usize::from(function_marker().is_match(text));
    count >= 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_binary_are_not_solidity() {
        assert!(!detect_solidity(b""));
        assert!(!detect_solidity(&[0xff, 0xfe, 0x00, 0x63]));
    }

    #[test]
    fn html_with_contract_word_only() {
        let html = b"<html><body><p>Read the contract carefully before signing.</p></body></html>";
        assert!(!detect_solidity(html));
    }

    #[test]
    fn contract_and_function() {
        assert!(detect_solidity(b"contract A {\n function f() public {}\n}"));
    }

    #[test]
    fn pragma_without_contract_declaration() {
        assert!(!detect_solidity(b"pragma solidity ^0.8.0; function f() {}"));
    }
}
