use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AccountKind, Chain, ChainTx, DeployedContract, TxHash, TxKind};
use crate::address::Address;

pub const TXS_FILE: &str = "txs.jsonl";
pub const ACCOUNTS_FILE: &str = "accounts.jsonl";

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate transaction {0}")]
    DuplicateTx(TxHash),
    #[error("contract {address} listed twice on {chain}")]
    DuplicateContract { address: Address, chain: Chain },
    #[error("inconsistent chain data: {0}")]
    Inconsistent(String),
    #[error("explorer request failed: {0}")]
    Transport(String),
}

/// One line of the transaction fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxRecord {
    pub hash: TxHash,
    pub chain: Chain,
    pub time: DateTime<Utc>,
    pub from: Address,
    pub to: Address,
    pub value_wei: String,
    pub kind: TxKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_signature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_parent: Option<TxHash>,
}

impl TxRecord {
    pub fn into_tx(self) -> Result<ChainTx, String> {
        let digits = self.value_wei.trim();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("value_wei `{}` is not a decimal integer", self.value_wei));
        }
        let value_wei: u128 = digits
            .parse()
            .map_err(|_| format!("value_wei `{}` out of range", self.value_wei))?;
        Ok(ChainTx {
            tx_hash: self.hash,
            chain: self.chain,
            block_time: self.time,
            from: self.from,
            to: self.to,
            value_wei,
            kind: self.kind,
            call_signature: self.call_signature,
            trace_parent: self.trace_parent,
        })
    }
}

impl From<&ChainTx> for TxRecord {
    fn from(tx: &ChainTx) -> Self {
        TxRecord {
            hash: tx.tx_hash.clone(),
            chain: tx.chain.clone(),
            time: tx.block_time,
            from: tx.from,
            to: tx.to,
            value_wei: tx.value_wei.to_string(),
            kind: tx.kind,
            call_signature: tx.call_signature.clone(),
            trace_parent: tx.trace_parent.clone(),
        }
    }
}

/// One line of the account fixture file. `source_path` is relative to the
/// file's directory; `source` carries the text inline (explorer responses).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountRecord {
    pub address: Address,
    pub kind: AccountKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Chain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creation_tx: Option<TxHash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl AccountRecord {
    pub fn chain(&self) -> Chain {
        self.chain.clone().unwrap_or(Chain::Eth)
    }
}

/// Read-only view of chain data, served either by a loaded [`ChainStore`]
/// or by a remote explorer.
pub trait ChainQuery: Sync {
    /// Every tx touching `address` on `chain`, ordered by time then hash.
    fn tx_history(&self, address: &Address, chain: &Chain) -> Result<Vec<ChainTx>, ChainError>;

    fn tx(&self, hash: &TxHash) -> Result<Option<ChainTx>, ChainError>;

    fn account_kind(&self, address: &Address, chain: &Chain) -> Result<AccountKind, ChainError>;

    fn contract(&self, address: &Address, chain: &Chain)
        -> Result<Option<DeployedContract>, ChainError>;

    /// All contracts known on `chain`, ordered by address.
    fn contracts(&self, chain: &Chain) -> Result<Vec<DeployedContract>, ChainError>;

    /// Contracts that sent at least one internal transfer to `scam`.
    fn contracts_draining_to(
        &self,
        scam: &Address,
        chain: &Chain,
    ) -> Result<Vec<DeployedContract>, ChainError> {
        let senders: BTreeSet<Address> = self
            .tx_history(scam, chain)?
            .into_iter()
            .filter(|tx| tx.kind == TxKind::Internal && tx.to == *scam && tx.from != *scam)
            .map(|tx| tx.from)
            .collect();
        senders
            .into_iter()
            .map(|addr| {
                Ok(self.contract(&addr, chain)?.unwrap_or(DeployedContract {
                    address: addr,
                    chain: chain.clone(),
                    creator: None,
                    creation_tx: None,
                    source: None,
                }))
            })
            .collect()
    }
}

type Key = (Chain, Address);

/// Indexed, immutable transaction store.
#[derive(Debug, Default, Clone)]
pub struct ChainStore {
    txs: Vec<ChainTx>,
    by_hash: HashMap<TxHash, usize>,
    by_address: HashMap<Key, Vec<usize>>,
    kinds: HashMap<Key, AccountKind>,
    contracts: BTreeMap<Key, DeployedContract>,
}

impl ChainStore {
    /// Builds a store from in-memory records. Transactions may be in any order.
    pub fn from_parts(
        txs: Vec<ChainTx>,
        accounts: Vec<(Chain, Address, AccountKind)>,
        contracts: Vec<DeployedContract>,
    ) -> Result<Self, ChainError> {
        let mut store = ChainStore::default();
        for (chain, address, kind) in accounts {
            store.declare(chain, address, kind)?;
        }
        for c in contracts {
            store.declare(c.chain.clone(), c.address, AccountKind::Contract)?;
            let key = (c.chain.clone(), c.address);
            if store.contracts.contains_key(&key) {
                return Err(ChainError::DuplicateContract {
                    address: c.address,
                    chain: c.chain,
                });
            }
            store.contracts.insert(key, c);
        }

        let mut txs = txs;
        txs.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        for (i, tx) in txs.iter().enumerate() {
            if store.by_hash.insert(tx.tx_hash.clone(), i).is_some() {
                return Err(ChainError::DuplicateTx(tx.tx_hash.clone()));
            }
            let sender_kind = match tx.kind {
                TxKind::Internal => AccountKind::Contract,
                TxKind::External => AccountKind::Eoa,
            };
            store.declare(tx.chain.clone(), tx.from, sender_kind).map_err(|_| {
                ChainError::Inconsistent(format!(
                    "{} is sent by {} but that account is not a{} account",
                    tx.tx_hash,
                    tx.from,
                    if sender_kind == AccountKind::Eoa { "n externally owned" } else { " contract" }
                ))
            })?;
            store
                .kinds
                .entry((tx.chain.clone(), tx.to))
                .or_insert(AccountKind::Unknown);
            store
                .by_address
                .entry((tx.chain.clone(), tx.from))
                .or_default()
                .push(i);
            if tx.to != tx.from {
                store
                    .by_address
                    .entry((tx.chain.clone(), tx.to))
                    .or_default()
                    .push(i);
            }
        }
        store.txs = txs;
        Ok(store)
    }

    fn declare(&mut self, chain: Chain, address: Address, kind: AccountKind) -> Result<(), ChainError> {
        let slot = self.kinds.entry((chain, address)).or_insert(AccountKind::Unknown);
        match (*slot, kind) {
            (_, AccountKind::Unknown) => Ok(()),
            (AccountKind::Unknown, k) => {
                *slot = k;
                Ok(())
            }
            (a, b) if a == b => Ok(()),
            _ => Err(ChainError::Inconsistent(format!(
                "{address} declared both as EOA and contract"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    /// All transactions in (time, hash) order.
    pub fn txs(&self) -> &[ChainTx] {
        &self.txs
    }

    pub fn chains(&self) -> BTreeSet<Chain> {
        self.kinds.keys().map(|(c, _)| c.clone()).collect()
    }

    /// Every address that appears in the store on `chain`.
    pub fn addresses(&self, chain: &Chain) -> BTreeSet<Address> {
        self.kinds
            .keys()
            .filter(|(c, _)| c == chain)
            .map(|(_, a)| *a)
            .collect()
    }

    /// Borrowing variant of [`ChainQuery::tx_history`].
    pub fn history(&self, address: &Address, chain: &Chain) -> impl DoubleEndedIterator<Item = &ChainTx> {
        self.by_address
            .get(&(chain.clone(), *address))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|&i| &self.txs[i])
    }

    pub fn get_tx(&self, hash: &TxHash) -> Option<&ChainTx> {
        self.by_hash.get(hash).map(|&i| &self.txs[i])
    }

    pub fn get_contract(&self, address: &Address, chain: &Chain) -> Option<&DeployedContract> {
        self.contracts.get(&(chain.clone(), *address))
    }

    pub fn kind_of(&self, address: &Address, chain: &Chain) -> AccountKind {
        self.kinds
            .get(&(chain.clone(), *address))
            .copied()
            .unwrap_or(AccountKind::Unknown)
    }

    /// Writes the store back out in fixture format. Contract sources are
    /// stored inline.
    pub fn save_fixture(&self, dir: &Path) -> Result<(), ChainError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ChainError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let txs_path = dir.join(TXS_FILE);
        let mut out = Vec::new();
        for tx in &self.txs {
            serde_json::to_writer(&mut out, &TxRecord::from(tx)).expect("tx record serializes");
            out.push(b'\n');
        }
        fs::write(&txs_path, out).map_err(io(&txs_path))?;

        let acc_path = dir.join(ACCOUNTS_FILE);
        let mut f = fs::File::create(&acc_path).map_err(io(&acc_path))?;
        let mut keys: Vec<&Key> = self.kinds.keys().collect();
        keys.sort();
        for key in keys {
            let kind = self.kinds[key];
            if kind == AccountKind::Unknown {
                continue;
            }
            let contract = self.contracts.get(key);
            let record = AccountRecord {
                address: key.1,
                kind,
                chain: Some(key.0.clone()),
                creator: contract.and_then(|c| c.creator),
                creation_tx: contract.and_then(|c| c.creation_tx.clone()),
                source_path: None,
                source: contract.and_then(|c| c.source.clone()),
            };
            let line = serde_json::to_string(&record).expect("account record serializes");
            writeln!(f, "{line}").map_err(io(&acc_path))?;
        }
        Ok(())
    }
}

impl ChainQuery for ChainStore {
    fn tx_history(&self, address: &Address, chain: &Chain) -> Result<Vec<ChainTx>, ChainError> {
        Ok(self.history(address, chain).cloned().collect())
    }

    fn tx(&self, hash: &TxHash) -> Result<Option<ChainTx>, ChainError> {
        Ok(self.get_tx(hash).cloned())
    }

    fn account_kind(&self, address: &Address, chain: &Chain) -> Result<AccountKind, ChainError> {
        Ok(self.kind_of(address, chain))
    }

    fn contract(
        &self,
        address: &Address,
        chain: &Chain,
    ) -> Result<Option<DeployedContract>, ChainError> {
        Ok(self.get_contract(address, chain).cloned())
    }

    fn contracts(&self, chain: &Chain) -> Result<Vec<DeployedContract>, ChainError> {
        Ok(self
            .contracts
            .iter()
            .filter(|((c, _), _)| c == chain)
            .map(|(_, v)| v.clone())
            .collect())
    }
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, ChainError> {
    let text = fs::read_to_string(path).map_err(|source| ChainError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| ChainError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

/// Loads a fixture directory holding `txs.jsonl` and optionally
/// `accounts.jsonl`. A path to a single file is read as the tx file.
pub fn load_fixture(path: &Path) -> Result<ChainStore, ChainError> {
    let (txs_path, accounts_path) = if path.is_dir() {
        (path.join(TXS_FILE), Some(path.join(ACCOUNTS_FILE)))
    } else {
        (path.to_path_buf(), None)
    };

    let mut txs = Vec::new();
    for (line, record) in read_lines::<TxRecord>(&txs_path)? {
        let tx = record.into_tx().map_err(|message| ChainError::Format {
            path: txs_path.clone(),
            line,
            message,
        })?;
        txs.push(tx);
    }

    let mut accounts = Vec::new();
    let mut contracts = Vec::new();
    if let Some(acc_path) = accounts_path.filter(|p| p.exists()) {
        let base = acc_path.parent().unwrap_or(Path::new("."));
        for (line, record) in read_lines::<AccountRecord>(&acc_path)? {
            let chain = record.chain();
            let format_err = |message: String| ChainError::Format {
                path: acc_path.clone(),
                line,
                message,
            };
            match record.kind {
                AccountKind::Contract => {
                    let source = match (&record.source, &record.source_path) {
                        (Some(_), Some(_)) => {
                            return Err(format_err("both source and source_path given".into()))
                        }
                        (Some(s), None) => Some(s.clone()),
                        (None, Some(rel)) => {
                            let p = base.join(rel);
                            Some(fs::read_to_string(&p).map_err(|source| ChainError::Io {
                                path: p,
                                source,
                            })?)
                        }
                        (None, None) => None,
                    };
                    contracts.push(DeployedContract {
                        address: record.address,
                        chain,
                        creator: record.creator,
                        creation_tx: record.creation_tx,
                        source,
                    });
                }
                kind => {
                    if record.source.is_some() || record.source_path.is_some() {
                        return Err(format_err("source given for a non-contract account".into()));
                    }
                    accounts.push((chain, record.address, kind));
                }
            }
        }
    }
    ChainStore::from_parts(txs, accounts, contracts)
}
