use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::deobfuscate::ImportStore;
use crate::solidity::detect_solidity;

/// Top-level domains accepted for bare (scheme-less) links. Kept short on
/// purpose: extensions like `.sh` or `.py` show up as file names in
/// instructions far more often than as hosts.
const BARE_TLDS: &[&str] = &[
    "com", "net", "org", "io", "co", "me", "info", "xyz", "app", "dev", "gg", "ly", "cc", "tv",
    "link", "site", "online", "club", "pro", "finance", "ee", "us", "uk", "ru",
];

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let stop = r#"\s<>"'`()\[\]{}"#;
        let pattern = format!(
            r"(?i)\bhttps?://[^{stop}]+|\b(?:[a-z0-9](?:[a-z0-9-]{{0,61}}[a-z0-9])?\.)+(?:{tlds})\b(?:/[^{stop}]*)?",
            tlds = BARE_TLDS.join("|"),
        );
        Regex::new(&pattern).expect("valid regex")
    })
}

/// http(s) URLs and bare links on a known TLD, in order of first
/// appearance. Every returned string is a substring of `text`.
pub fn extract_urls(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for m in url_regex().find_iter(text) {
        // the host part of an e-mail address is not a link
        if text[..m.start()].ends_with('@') {
            continue;
        }
        let url = m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?']);
        if url.ends_with("://") || url.is_empty() {
            continue;
        }
        if seen.insert(url) {
            out.push(url.to_string());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlCheck {
    pub url: String,
    /// Whether the snapshot store holds content for the URL.
    pub fetched: bool,
    pub solidity: bool,
}

/// Looks each URL up in an offline snapshot (bare links are also tried with
/// an `https://` prefix) and flags content that looks like Solidity.
pub fn harvest_solidity_urls(urls: &[String], snapshot: &ImportStore) -> Vec<UrlCheck> {
    urls.iter()
        .map(|url| {
            let content = snapshot.get(url).or_else(|| {
                if url.contains("://") {
                    None
                } else {
                    snapshot.get(&format!("https://{url}"))
                }
            });
            UrlCheck {
                url: url.clone(),
                fetched: content.is_some(),
                solidity: content.is_some_and(|c| detect_solidity(c.as_bytes())),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_wins_over_bare_domain() {
        let urls = extract_urls("code: https://pastebin.com/raw/1Tt9FwKd.");
        assert_eq!(urls, vec!["https://pastebin.com/raw/1Tt9FwKd"]);
    }

    #[test]
    fn emails_and_file_names_are_skipped() {
        assert!(extract_urls("mail me@gmail.com or run setup.sh").is_empty());
    }
}
