//! Chain transaction data, history queries and scam-address expansion.

mod expand;
mod explorer;
mod store;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::address::Address;

pub use expand::{expand_addresses, expand_addresses_with, ExpansionAudit, ExpansionDecision, ExpansionReport, MAX_EXPANSION_ROUNDS};
pub use explorer::{ExplorerClient, Transport, TransportError};
pub use store::{
    load_fixture, AccountRecord, ChainError, ChainQuery, ChainStore, TxRecord, ACCOUNTS_FILE, TXS_FILE,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chain {
    Eth,
    Bsc,
    Other(String),
}

impl Chain {
    pub fn as_str(&self) -> &str {
        match self {
            Chain::Eth => "ETH",
            Chain::Bsc => "BSC",
            Chain::Other(name) => name,
        }
    }

    /// Ticker of the native coin, used for report column names.
    pub fn coin(&self) -> &str {
        match self {
            Chain::Eth => "ETH",
            Chain::Bsc => "BNB",
            Chain::Other(name) => name,
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Chain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty chain name".into());
        }
        Ok(match s.to_ascii_uppercase().as_str() {
            "ETH" | "ETHEREUM" => Chain::Eth,
            "BSC" | "BNB" => Chain::Bsc,
            _ => Chain::Other(s.to_string()),
        })
    }
}

impl Serialize for Chain {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Lowercase `0x` + 64 hex digit transaction hash.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxHash(String);

impl TxHash {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for TxHash {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let ok = t.len() == 66
            && (t.starts_with("0x") || t.starts_with("0X"))
            && t[2..].bytes().all(|b| b.is_ascii_hexdigit());
        if ok {
            Ok(TxHash(format!("0x{}", t[2..].to_ascii_lowercase())))
        } else {
            Err(format!("invalid transaction hash `{s}`"))
        }
    }
}

impl fmt::Display for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxHash({})", self.0)
    }
}

impl Serialize for TxHash {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for TxHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxKind {
    External,
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccountKind {
    Eoa,
    Contract,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainTx {
    pub tx_hash: TxHash,
    pub chain: Chain,
    pub block_time: DateTime<Utc>,
    pub from: Address,
    pub to: Address,
    pub value_wei: u128,
    pub kind: TxKind,
    /// For internal transfers, the signature of the call that triggered them.
    pub call_signature: Option<String>,
    /// The external transaction whose trace produced this internal one.
    pub trace_parent: Option<TxHash>,
}

impl ChainTx {
    /// Total order used for every tx listing: time, then hash.
    pub fn order_key(&self) -> (DateTime<Utc>, &TxHash) {
        (self.block_time, &self.tx_hash)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeployedContract {
    pub address: Address,
    pub chain: Chain,
    pub creator: Option<Address>,
    pub creation_tx: Option<TxHash>,
    pub source: Option<String>,
}

/// Formats wei as a decimal coin amount without trailing zeros.
pub fn format_coin(wei: u128) -> String {
    const UNIT: u128 = 1_000_000_000_000_000_000;
    let whole = wei / UNIT;
    let frac = wei % UNIT;
    if frac == 0 {
        return whole.to_string();
    }
    let digits = format!("{frac:018}");
    format!("{whole}.{}", digits.trim_end_matches('0'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_formatting() {
        assert_eq!(format_coin(81_500_000_000_000_000_000), "81.5");
        assert_eq!(format_coin(10_000_000_000_000_000), "0.01");
        assert_eq!(format_coin(0), "0");
        assert_eq!(format_coin(1), "0.000000000000000001");
    }

    #[test]
    fn hashes_normalize_case() {
        let h: TxHash = "0x2CCAB130cd98699989f10003723fb39a7c4c20dd46a1744652ec3415d14453eb".parse().unwrap();
        assert_eq!(h.as_str(), "0x2ccab130cd98699989f10003723fb39a7c4c20dd46a1744652ec3415d14453eb");
        assert!("0x12".parse::<TxHash>().is_err());
    }

    #[test]
    fn chain_names() {
        assert_eq!("eth".parse::<Chain>().unwrap(), Chain::Eth);
        assert_eq!("BSC".parse::<Chain>().unwrap(), Chain::Bsc);
        assert_eq!("Polygon".parse::<Chain>().unwrap(), Chain::Other("Polygon".into()));
        assert_eq!(Chain::Bsc.coin(), "BNB");
    }
}
