use thiserror::Error;

use super::store::{AccountRecord, ChainError, ChainQuery, TxRecord};
use super::{AccountKind, Chain, ChainTx, DeployedContract, TxHash};
use crate::address::Address;

#[derive(Debug, Error)]
#[error("{endpoint}: {message}")]
pub struct TransportError {
    pub endpoint: String,
    pub message: String,
}

/// Request/response channel to an explorer service. Responses are
/// newline-delimited JSON in the same record format as fixture files.
///
/// Endpoints used: `txlist` (chain, address), `tx` (hash),
/// `account` (chain, address) and `contracts` (chain).
pub trait Transport: Sync {
    fn get(&self, endpoint: &str, params: &[(&str, String)]) -> Result<String, TransportError>;
}

/// [`ChainQuery`] implementation backed by an explorer [`Transport`].
pub struct ExplorerClient<T> {
    transport: T,
}

impl<T: Transport> ExplorerClient<T> {
    pub fn new(transport: T) -> Self {
        ExplorerClient { transport }
    }

    fn fetch<R: serde::de::DeserializeOwned>(
        &self,
        endpoint: &str,
        params: &[(&str, String)],
    ) -> Result<Vec<R>, ChainError> {
        let body = self
            .transport
            .get(endpoint, params)
            .map_err(|e| ChainError::Transport(e.to_string()))?;
        body.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l)
                    .map_err(|e| ChainError::Transport(format!("{endpoint}: bad record: {e}")))
            })
            .collect()
    }

    fn account(&self, address: &Address, chain: &Chain) -> Result<Option<AccountRecord>, ChainError> {
        let mut records: Vec<AccountRecord> = self.fetch(
            "account",
            &[("chain", chain.to_string()), ("address", address.to_lower_hex())],
        )?;
        Ok(records.pop())
    }
}

fn to_contract(record: AccountRecord, chain: &Chain) -> DeployedContract {
    DeployedContract {
        address: record.address,
        chain: record.chain.unwrap_or_else(|| chain.clone()),
        creator: record.creator,
        creation_tx: record.creation_tx,
        source: record.source,
    }
}

fn to_tx(record: TxRecord) -> Result<ChainTx, ChainError> {
    record.into_tx().map_err(ChainError::Transport)
}

impl<T: Transport> ChainQuery for ExplorerClient<T> {
    fn tx_history(&self, address: &Address, chain: &Chain) -> Result<Vec<ChainTx>, ChainError> {
        let records: Vec<TxRecord> = self.fetch(
            "txlist",
            &[("chain", chain.to_string()), ("address", address.to_lower_hex())],
        )?;
        let mut txs = records
            .into_iter()
            .map(to_tx)
            .collect::<Result<Vec<_>, _>>()?;
        txs.retain(|tx| &tx.chain == chain && (tx.from == *address || tx.to == *address));
        txs.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        txs.dedup_by(|a, b| a.tx_hash == b.tx_hash);
        Ok(txs)
    }

    fn tx(&self, hash: &TxHash) -> Result<Option<ChainTx>, ChainError> {
        let mut records: Vec<TxRecord> = self.fetch("tx", &[("hash", hash.to_string())])?;
        records.pop().map(to_tx).transpose()
    }

    fn account_kind(&self, address: &Address, chain: &Chain) -> Result<AccountKind, ChainError> {
        Ok(self
            .account(address, chain)?
            .map(|r| r.kind)
            .unwrap_or(AccountKind::Unknown))
    }

    fn contract(
        &self,
        address: &Address,
        chain: &Chain,
    ) -> Result<Option<DeployedContract>, ChainError> {
        Ok(self
            .account(address, chain)?
            .filter(|r| r.kind == AccountKind::Contract)
            .map(|r| to_contract(r, chain)))
    }

    fn contracts(&self, chain: &Chain) -> Result<Vec<DeployedContract>, ChainError> {
        let records: Vec<AccountRecord> = self.fetch("contracts", &[("chain", chain.to_string())])?;
        let mut out: Vec<DeployedContract> = records
            .into_iter()
            .filter(|r| r.kind == AccountKind::Contract)
            .map(|r| to_contract(r, chain))
            .collect();
        out.sort_by_key(|c| c.address);
        Ok(out)
    }
}
